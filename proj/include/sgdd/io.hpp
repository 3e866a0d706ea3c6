#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sgdd/errors.hpp"

namespace sgdd {

/// Round-trip-exact decimal text for a double (17 significant digits).
std::string format_double(double v);
std::string format_double_list(const Eigen::ArrayXd& v);
std::string format_int_list(const std::vector<int>& v);

double parse_double(const std::string& s);

/// Flat `key = value` text with '#' comments. Keys are unique; order of first
/// appearance is preserved so a file can be re-emitted canonically. Blocks
/// delimited by `<name>_begin` / `<name>_end` nest a sub-file verbatim.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& is);
    static KeyValueFile parse_string(const std::string& text);

    bool has(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key) const;
    std::int64_t get_int64(const std::string& key) const;
    std::uint64_t get_uint64(const std::string& key) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    Eigen::ArrayXd get_double_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    const std::string& block(const std::string& name) const;
    bool has_block(const std::string& name) const;

    void set(const std::string& key, const std::string& value);
    void set_block(const std::string& name, const std::string& content);

    /// Throws ConfigError if any key is neither listed nor prefixed by
    /// `allowed_prefix` (empty prefix matches nothing).
    void reject_unknown_keys(const std::set<std::string>& allowed,
                             const std::string& allowed_prefix) const;

    std::string serialize() const;
    const std::vector<std::string>& key_order() const { return order_; }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> blocks_;
    std::vector<std::string> order_;        // keys and "<block:name>" markers
};

/// FNV-1a 64-bit over raw bytes; used to fingerprint task files.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
/// Write via a temp file + rename so readers never observe partial content.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace sgdd
