#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wgf/rng.hpp"

namespace wgf {

/// Parse failure with position info; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    int line;
    int column;
    ConfigError(int l, int c, const std::string& what)
        : std::runtime_error("config error at line " + std::to_string(l) + ", column " +
                             std::to_string(c) + ": " + what),
          line(l),
          column(c) {}
};

/// Sectioned key = value text. Sections and keys keep declaration order;
/// the hash is order-independent.
class Config {
public:
    struct Section {
        std::string name;
        int line = 0;
        std::vector<std::pair<std::string, std::string>> entries;

        bool has(const std::string& key) const {
            for (const auto& [k, v] : entries)
                if (k == key) return true;
            return false;
        }
        const std::string& get(const std::string& key) const {
            for (const auto& [k, v] : entries)
                if (k == key) return v;
            throw std::runtime_error("missing key '" + key + "' in section [" + name + "]");
        }
        std::string get_or(const std::string& key, const std::string& fallback) const {
            return has(key) ? get(key) : fallback;
        }
        double number(const std::string& key) const { return parse_number(get(key), key); }
        double number_or(const std::string& key, double fallback) const {
            return has(key) ? number(key) : fallback;
        }
        int integer_or(const std::string& key, int fallback) const {
            return has(key) ? static_cast<int>(std::llround(number(key))) : fallback;
        }
        std::vector<double> numbers(const std::string& key) const {
            std::istringstream in(get(key));
            std::vector<double> out;
            std::string tok;
            while (in >> tok) out.push_back(parse_number(tok, key));
            return out;
        }
        std::vector<std::string> words(const std::string& key) const {
            std::istringstream in(get(key));
            std::vector<std::string> out;
            std::string tok;
            while (in >> tok) out.push_back(tok);
            return out;
        }

    private:
        static double parse_number(const std::string& s, const std::string& key) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return v;
            } catch (const std::exception&) {
                throw std::runtime_error("key '" + key + "': not a number: '" + s + "'");
            }
        }
    };

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string raw;
        int line_no = 0;
        Section* cur = nullptr;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = raw;
            const auto comment = line.find_first_of("#;");
            if (comment != std::string::npos) line = line.substr(0, comment);
            const auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            const auto e = line.find_last_not_of(" \t\r");
            line = line.substr(b, e - b + 1);
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(line_no, static_cast<int>(b + 1), "unterminated section header");
                const std::string name = line.substr(1, line.size() - 2);
                if (name.empty())
                    throw ConfigError(line_no, static_cast<int>(b + 2), "empty section name");
                cfg.sections_.push_back(Section{name, line_no, {}});
                cur = &cfg.sections_.back();
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(line_no, static_cast<int>(b + 1), "expected key = value");
            if (cur == nullptr)
                throw ConfigError(line_no, static_cast<int>(b + 1), "entry outside any section");
            auto trim = [](std::string s) {
                const auto x = s.find_first_not_of(" \t");
                if (x == std::string::npos) return std::string();
                const auto y = s.find_last_not_of(" \t");
                return s.substr(x, y - x + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(line_no, static_cast<int>(b + 1), "empty key");
            cur->entries.emplace_back(key, value);
        }
        return cfg;
    }

    const std::vector<Section>& sections() const { return sections_; }

    bool has(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name == name) return true;
        return false;
    }

    const Section& section(const std::string& name) const {
        for (const auto& s : sections_)
            if (s.name == name) return s;
        throw std::runtime_error("missing section [" + name + "]");
    }

    /// FNV-1a over the canonical sorted entry list: reordering sections or
    /// keys does not change the hash.
    std::string hash() const {
        std::vector<std::string> lines;
        for (const auto& s : sections_)
            for (const auto& [k, v] : s.entries)
                lines.push_back(s.name + '\x1f' + k + '\x1f' + v + '\n');
        std::sort(lines.begin(), lines.end());
        std::uint64_t h = 14695981039346656037ull;
        for (const auto& l : lines) h = fnv1a(l, h);
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }

private:
    std::vector<Section> sections_;
};

}  // namespace wgf
