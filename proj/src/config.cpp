#include "nsopt/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nsopt {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        // comments start at '#' outside any value context
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ParseError("unterminated section header", lineno,
                                 int(raw.find('[')) + 1);
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ParseError("empty section name", lineno, 1);
            if (!cfg.data_.count(section)) {
                cfg.section_order_.push_back(section);
                cfg.data_[section] = {};
                cfg.key_order_[section] = {};
            }
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno, int(raw.find(t)) + 1);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno, 1);
        if (section.empty())
            throw ParseError("key '" + key + "' appears before any [section]", lineno, 1);
        if (cfg.data_[section].count(key))
            throw ParseError("duplicate key '" + key + "' in [" + section + "]", lineno, 1);
        cfg.data_[section][key] = {value, lineno};
        cfg.key_order_[section].push_back(key);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str());
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    if (s == data_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::vector<std::string> Config::sections() const { return section_order_; }

std::vector<std::string> Config::keys(const std::string& section) const {
    auto it = key_order_.find(section);
    return it == key_order_.end() ? std::vector<std::string>{} : it->second;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e)
        throw std::runtime_error("missing config key [" + section + "] " + key);
    return e->value;
}

std::string Config::get_string_or(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

double Config::get_real(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw std::runtime_error("missing config key [" + section + "] " + key);
    try {
        std::size_t pos = 0;
        double v = std::stod(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("value of [" + section + "] " + key + " is not a real number: '" +
                             e->value + "'",
                         e->line, 1);
    }
}

double Config::get_real_or(const std::string& section, const std::string& key,
                           double fallback) const {
    return has(section, key) ? get_real(section, key) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw std::runtime_error("missing config key [" + section + "] " + key);
    try {
        std::size_t pos = 0;
        long long v = std::stoll(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("value of [" + section + "] " + key + " is not an integer: '" +
                             e->value + "'",
                         e->line, 1);
    }
}

long long Config::get_int_or(const std::string& section, const std::string& key,
                             long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ParseError("value of [" + section + "] " + key + " is not a boolean: '" + e->value +
                         "'",
                     e->line, 1);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    if (!data_.count(section)) {
        section_order_.push_back(section);
        data_[section] = {};
        key_order_[section] = {};
    }
    if (!data_[section].count(key)) key_order_[section].push_back(key);
    data_[section][key] = {value, 0};
}

std::string Config::serialize() const {
    std::ostringstream os;
    for (const std::string& s : section_order_) {
        os << "[" << s << "]\n";
        for (const std::string& k : key_order_.at(s))
            os << k << " = " << data_.at(s).at(k).value << "\n";
        os << "\n";
    }
    return os.str();
}

bool Config::section_equal(const Config& other, const std::string& section) const {
    auto a = data_.find(section);
    auto b = other.data_.find(section);
    if ((a == data_.end()) != (b == other.data_.end())) return false;
    if (a == data_.end()) return true;
    if (a->second.size() != b->second.size()) return false;
    for (const auto& [k, e] : a->second) {
        auto it = b->second.find(k);
        if (it == b->second.end() || it->second.value != e.value) return false;
    }
    return true;
}

int Config::line_of(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    return e ? e->line : 0;
}

}  // namespace nsopt
