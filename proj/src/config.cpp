#include "homog/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <vector>

#include "homog/errors.hpp"

namespace homog {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Entry {
    std::string value;
    int line = 0;
};

// Raw key/value table with line numbers, plus bookkeeping of which keys the
// interpreter consumed so that typos are reported instead of ignored.
class Table {
public:
    explicit Table(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source_ + ": " + msg); }

    void read(std::istream& in) {
        static const std::set<std::string> known = {"environment", "experiment", "regularized", "rwre"};
        std::string raw;
        std::string section;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            const std::string line = trim(raw);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(lineno, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (!known.count(section)) fail(lineno, "unknown section [" + section + "]");
                if (!seen_sections_.insert(section).second) fail(lineno, "duplicate section [" + section + "]");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
            if (section.empty()) fail(lineno, "entry outside of any section");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            // Trailing comments need whitespace before the marker.
            for (const char* marker : {" #", "\t#", " ;", "\t;"}) {
                const auto pos = value.find(marker);
                if (pos != std::string::npos) value = trim(value.substr(0, pos));
            }
            if (key.empty()) fail(lineno, "empty key");
            if (value.empty()) fail(lineno, "empty value for '" + key + "'");
            auto& sec = sections_[section];
            if (sec.count(key)) fail(lineno, "duplicate key '" + key + "'");
            sec[key] = {value, lineno};
        }
    }

    const Entry* find(const std::string& section, const std::string& key) {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        used_.insert(section + "." + key);
        return &k->second;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key);
    }

    std::string str(const std::string& section, const std::string& key, const std::string& fallback) {
        const Entry* e = find(section, key);
        return e ? e->value : fallback;
    }

    std::string required(const std::string& section, const std::string& key) {
        const Entry* e = find(section, key);
        if (!e) fail("missing required key '" + key + "' in [" + section + "]");
        return e->value;
    }

    double number(const std::string& section, const std::string& key, double fallback) {
        const Entry* e = find(section, key);
        return e ? to_double(e->value, e->line) : fallback;
    }

    std::int64_t integer(const std::string& section, const std::string& key, std::int64_t fallback) {
        const Entry* e = find(section, key);
        return e ? to_int(e->value, e->line) : fallback;
    }

    std::vector<double> numbers(const std::string& section, const std::string& key) {
        std::vector<double> out;
        const Entry* e = find(section, key);
        if (!e) return out;
        for (const auto& item : split(e->value, e->line)) out.push_back(to_double(item, e->line));
        return out;
    }

    std::vector<std::int64_t> integers(const std::string& section, const std::string& key) {
        std::vector<std::int64_t> out;
        const Entry* e = find(section, key);
        if (!e) return out;
        for (const auto& item : split(e->value, e->line)) out.push_back(to_int(item, e->line));
        return out;
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) {
        const Entry* e = find(section, key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
        if (e->value == "false" || e->value == "no" || e->value == "0") return false;
        fail(e->line, "expected a boolean for '" + key + "'");
    }

    int line_of(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return 0;
        auto k = s->second.find(key);
        return k == s->second.end() ? 0 : k->second.line;
    }

    void reject_unused() const {
        for (const auto& [section, keys] : sections_)
            for (const auto& [key, entry] : keys)
                if (!used_.count(section + "." + key))
                    fail(entry.line, "unknown or inapplicable key '" + key + "' in [" + section + "]");
    }

private:
    std::vector<std::string> split(const std::string& value, int line) const {
        std::vector<std::string> items;
        std::size_t start = 0;
        while (true) {
            const auto comma = value.find(',', start);
            std::string item = trim(value.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (item.empty()) fail(line, "empty list item");
            items.push_back(item);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return items;
    }

    double to_double(const std::string& s, int line) const {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') fail(line, "not a number: '" + s + "'");
        return v;
    }

    std::int64_t to_int(const std::string& s, int line) const {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) fail(line, "not an integer: '" + s + "'");
        return v;
    }

    std::string source_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::set<std::string> seen_sections_;
    std::set<std::string> used_;
};

EnvironmentSpec read_environment(Table& t) {
    const std::string sec = "environment";
    const int d = static_cast<int>(t.integer(sec, "dimension", 2));
    if (d < 1 || d > kMaxDimension) t.fail(t.line_of(sec, "dimension"), "dimension must be in 1..6");
    const std::string structure = t.str(sec, "structure", "iid");

    if (structure == "iid") {
        const std::string law = t.str(sec, "law", "bernoulli");
        if (law == "bernoulli") {
            return EnvironmentSpec::iid(d, Law::bernoulli(t.number(sec, "alpha", 1.0), t.number(sec, "beta", 4.0),
                                                          t.number(sec, "p_alpha", 0.5)));
        }
        if (law == "uniform")
            return EnvironmentSpec::iid(d, Law::uniform(t.number(sec, "alpha", 1.0), t.number(sec, "beta", 4.0)));
        if (law == "constant") return EnvironmentSpec::iid(d, Law::constant(t.number(sec, "value", 1.0)));
        if (law == "discrete") {
            auto values = t.numbers(sec, "values");
            auto weights = t.numbers(sec, "weights");
            if (values.empty()) t.fail("discrete law needs 'values'");
            if (weights.empty()) weights.assign(values.size(), 1.0);
            return EnvironmentSpec::iid(d, Law::discrete(std::move(values), std::move(weights)));
        }
        t.fail(t.line_of(sec, "law"), "unknown law '" + law + "'");
    }
    if (structure == "islands") {
        IslandsParams p;
        p.window_radius = static_cast<int>(t.integer(sec, "radius", p.window_radius));
        p.low = t.number(sec, "low", p.low);
        p.high = t.number(sec, "high", p.high);
        if (t.has(sec, "marginal") && t.has(sec, "threshold"))
            t.fail(t.line_of(sec, "threshold"), "give either 'marginal' or 'threshold', not both");
        if (t.has(sec, "threshold")) {
            p.hidden_threshold = t.number(sec, "threshold", 0.5);
        } else {
            const double marginal = t.number(sec, "marginal", 0.5);
            if (!(marginal > 0.0 && marginal < 1.0)) t.fail(t.line_of(sec, "marginal"), "marginal must be in (0, 1)");
            p.hidden_threshold = islands_threshold(marginal, p.window_radius, d);
        }
        return EnvironmentSpec::islands_model(d, p);
    }
    if (structure == "periodic-cell") {
        const std::string cell = t.str(sec, "cell", "asymmetric");
        if (cell == "asymmetric") {
            if (d != 2) t.fail(t.line_of(sec, "dimension"), "the shipped asymmetric cell is two-dimensional");
            return default_asymmetric_cell();
        }
        if (cell == "explicit") {
            PeriodicCellParams p;
            p.period = static_cast<int>(t.integer(sec, "period", 1));
            p.edges = t.numbers(sec, "edges");
            return EnvironmentSpec::periodic_cell(d, std::move(p));
        }
        t.fail(t.line_of(sec, "cell"), "unknown cell '" + cell + "' (asymmetric | explicit)");
    }
    t.fail(t.line_of(sec, "structure"), "unknown structure '" + structure + "'");
}

Functional read_functional(Table& t, const std::vector<double>& xi) {
    const std::string name = t.str("rwre", "functional", "gaussian");
    if (name == "gaussian") return Functional::gaussian();
    if (name == "sin") return Functional::sin_first_coord();
    if (name == "square") return Functional::square_displacement(xi);
    if (name == "indicator") return Functional::indicator(xi, t.number("rwre", "threshold", 0.5));
    t.fail(t.line_of("rwre", "functional"), "unknown functional '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    Table t(source);
    t.read(in);
    ExperimentConfig cfg;

    try {
        cfg.environment = read_environment(t);
        cfg.environment.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(source, 0) == 0) throw;
        t.fail("[environment]: " + msg);
    }
    const int d = cfg.environment.dimension;

    const std::string ex = "experiment";
    cfg.method = [&] {
        const std::string name = t.required(ex, "method");
        try {
            return parse_method(name);
        } catch (const ConfigError& e) {
            t.fail(t.line_of(ex, "method"), e.what());
        }
    }();
    cfg.sweep = t.integers(ex, "sweep");
    if (cfg.sweep.empty()) t.fail("missing required key 'sweep' in [experiment]");

    if (t.has(ex, "k")) {
        if (t.has(ex, "k_scale")) t.fail(t.line_of(ex, "k_scale"), "give either 'k' or 'k_scale', not both");
        cfg.realizations.counts = t.integers(ex, "k");
    } else if (t.has(ex, "k_scale")) {
        cfg.realizations.scale = t.number(ex, "k_scale", 0.0);
        cfg.realizations.anchor = t.number(ex, "k_anchor", 1.0);
        cfg.realizations.power = t.number(ex, "k_power", 0.0);
    } else {
        t.fail("missing 'k' (or 'k_scale') in [experiment]");
    }

    cfg.xi = t.numbers(ex, "xi");
    if (cfg.xi.empty()) {
        cfg.xi.assign(d, 0.0);
        cfg.xi[0] = 1.0;
    }
    const std::int64_t seed = t.integer(ex, "seed", 1);
    if (seed < 0) t.fail(t.line_of(ex, "seed"), "seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.workers = static_cast<int>(t.integer(ex, "workers", 1));
    cfg.output = t.str(ex, "output", cfg.output);
    cfg.solver.tol = t.number(ex, "tol", cfg.solver.tol);
    cfg.solver.max_iter = static_cast<int>(t.integer(ex, "max_iter", 0));
    cfg.weighted_fit = t.boolean(ex, "weighted_fit", false);

    const std::string ref = t.str(ex, "reference", "none");
    const int ref_line = t.line_of(ex, "reference");
    if (ref == "none") {
        cfg.reference.kind = ReferenceKind::None;
    } else if (ref.rfind("exact:", 0) == 0) {
        cfg.reference.kind = ReferenceKind::Exact;
        char* end = nullptr;
        const std::string v = ref.substr(6);
        cfg.reference.value = std::strtod(v.c_str(), &end);
        if (v.empty() || *end != '\0') t.fail(ref_line, "bad exact reference '" + ref + "'");
    } else if (ref.rfind("surrogate:", 0) == 0) {
        cfg.reference.kind = ReferenceKind::Surrogate;
        try {
            cfg.reference.surrogate = parse_method(ref.substr(10));
        } catch (const ConfigError& e) {
            t.fail(ref_line, e.what());
        }
    } else {
        t.fail(ref_line, "reference must be exact:<value>, surrogate:<method> or none");
    }

    if (cfg.method == ExperimentMethod::Regularized) {
        const std::string rs = "regularized";
        auto& r = cfg.regularization;
        r.filter_fraction = t.number(rs, "filter_fraction", r.filter_fraction);
        r.mu_prefactor = t.number(rs, "mu_prefactor", r.mu_prefactor);
        r.mu_exponent = t.number(rs, "mu_exponent", r.mu_exponent);
        r.plateau = t.number(rs, "plateau", r.plateau);
        const std::string mask = t.str(rs, "mask", "trapezoid");
        if (mask == "trapezoid")
            r.mask = MaskShape::PiecewiseAffine;
        else if (mask == "flat")
            r.mask = MaskShape::Flat;
        else
            t.fail(t.line_of(rs, "mask"), "mask must be trapezoid or flat");
    }
    if (cfg.method == ExperimentMethod::RwreFunctional) cfg.functional = read_functional(t, cfg.xi);

    t.reject_unused();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        t.fail(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

}  // namespace homog
