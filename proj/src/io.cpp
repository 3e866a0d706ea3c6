#include "sgdd/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

namespace sgdd {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_double_list(const Eigen::ArrayXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::string format_int_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || errno == ERANGE)
        throw ConfigError("cannot parse number '" + s + "'");
    while (*end == ' ') ++end;
    if (*end != '\0') throw ConfigError("trailing junk after number '" + s + "'");
    return v;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

} // namespace

KeyValueFile KeyValueFile::parse(std::istream& is) {
    KeyValueFile kv;
    std::string line;
    std::string block_name;
    std::string block_body;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (!block_name.empty()) {
            if (t == block_name + "_end") {
                kv.set_block(block_name, block_body);
                block_name.clear();
                block_body.clear();
            } else {
                block_body += line;
                block_body += '\n';
            }
            continue;
        }
        if (t.empty() || t[0] == '#') continue;
        if (t.size() > 6 && t.substr(t.size() - 6) == "_begin" && t.find('=') == std::string::npos) {
            block_name = t.substr(0, t.size() - 6);
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed line: '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key in line: '" + t + "'");
        if (kv.values_.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv.values_[key] = value;
        kv.order_.push_back(key);
    }
    if (!block_name.empty()) throw ConfigError("unterminated block '" + block_name + "'");
    return kv;
}

KeyValueFile KeyValueFile::parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
}

bool KeyValueFile::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& KeyValueFile::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
}

std::string KeyValueFile::get_string_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int KeyValueFile::get_int(const std::string& key) const {
    const double v = parse_double(get_string(key));
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ConfigError("key '" + key + "' is not an integer");
    return i;
}

std::int64_t KeyValueFile::get_int64(const std::string& key) const {
    const std::string& s = get_string(key);
    return static_cast<std::int64_t>(std::strtoll(s.c_str(), nullptr, 10));
}

std::uint64_t KeyValueFile::get_uint64(const std::string& key) const {
    const std::string& s = get_string(key);
    return static_cast<std::uint64_t>(std::strtoull(s.c_str(), nullptr, 10));
}

double KeyValueFile::get_double(const std::string& key) const {
    return parse_double(get_string(key));
}

double KeyValueFile::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

Eigen::ArrayXd KeyValueFile::get_double_list(const std::string& key) const {
    const auto parts = split_commas(get_string(key));
    Eigen::ArrayXd v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = parse_double(parts[i]);
    return v;
}

std::vector<int> KeyValueFile::get_int_list(const std::string& key) const {
    const auto parts = split_commas(get_string(key));
    std::vector<int> v(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
        v[i] = static_cast<int>(parse_double(parts[i]));
    return v;
}

const std::string& KeyValueFile::block(const std::string& name) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw ConfigError("missing block '" + name + "'");
    return it->second;
}

bool KeyValueFile::has_block(const std::string& name) const { return blocks_.count(name) > 0; }

void KeyValueFile::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

void KeyValueFile::set_block(const std::string& name, const std::string& content) {
    if (!blocks_.count(name)) order_.push_back("<block:" + name + ">");
    blocks_[name] = content;
}

void KeyValueFile::reject_unknown_keys(const std::set<std::string>& allowed,
                                       const std::string& allowed_prefix) const {
    for (const auto& [key, value] : values_) {
        (void)value;
        if (allowed.count(key)) continue;
        if (!allowed_prefix.empty() && key.rfind(allowed_prefix, 0) == 0) continue;
        throw ConfigError("unknown key '" + key + "'");
    }
}

std::string KeyValueFile::serialize() const {
    std::string out;
    for (const auto& entry : order_) {
        if (entry.rfind("<block:", 0) == 0) {
            const std::string name = entry.substr(7, entry.size() - 8);
            out += name + "_begin\n" + blocks_.at(name) + name + "_end\n";
        } else {
            out += entry + " = " + values_.at(entry) + "\n";
        }
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

} // namespace sgdd
