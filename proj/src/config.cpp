#include "pinlab/cli.hpp"

#include "pinlab/errors.hpp"
#include "pinlab/kv.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace pinlab {

namespace {

[[noreturn]] void range_error(const kv::Entry& e, const std::string& msg)
{
    throw ConfigError("line " + std::to_string(e.line) + ", column " + std::to_string(e.column) +
                          ": field '" + e.key + "' " + msg,
                      e.line, e.column, e.key);
}

class Reader {
public:
    Reader(const kv::Section& s, std::initializer_list<const char*> known) : s_(s)
    {
        for (const auto& e : s.entries) {
            if (std::find_if(known.begin(), known.end(),
                             [&](const char* k) { return e.key == k; }) == known.end())
                throw ConfigError("line " + std::to_string(e.line) + ", column 1: unknown key '" +
                                      e.key + "' in [" + s.name + "]",
                                  e.line, 1, e.key);
        }
    }

    const kv::Entry* find(const char* key) const { return s_.find(key); }

    const kv::Entry& require(const char* key) const
    {
        const auto* e = s_.find(key);
        if (!e)
            throw ConfigError("line " + std::to_string(s_.line) + ": [" + s_.name +
                                  "] is missing key '" + key + "'",
                              s_.line, 0, key);
        return *e;
    }

    double real(const char* key, double def, const std::function<const char*(double)>& check = {}) const
    {
        const auto* e = find(key);
        if (!e)
            return def;
        const double v = kv::to_double(*e);
        if (check)
            if (const char* msg = check(v))
                range_error(*e, msg);
        return v;
    }

    std::optional<double> optional_real(const char* key) const
    {
        const auto* e = find(key);
        if (!e)
            return std::nullopt;
        return kv::to_double(*e);
    }

    std::int64_t integer(const char* key, std::int64_t def, std::int64_t lo,
                         std::int64_t hi = std::numeric_limits<std::int64_t>::max()) const
    {
        const auto* e = find(key);
        if (!e)
            return def;
        const auto v = kv::to_int(*e);
        if (v < lo || v > hi)
            range_error(*e, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }

    std::vector<double> list(const char* key, std::vector<double> def,
                             const std::function<const char*(double)>& check = {}) const
    {
        const auto* e = find(key);
        if (!e)
            return def;
        auto v = kv::to_double_list(*e);
        if (check)
            for (double x : v)
                if (const char* msg = check(x))
                    range_error(*e, msg);
        return v;
    }

    bool boolean(const char* key, bool def) const
    {
        const auto* e = find(key);
        return e ? kv::to_bool(*e) : def;
    }

    std::string word(const char* key, std::string def, std::initializer_list<const char*> allowed) const
    {
        const auto* e = find(key);
        if (!e)
            return def;
        for (const char* a : allowed)
            if (e->value == a)
                return e->value;
        std::string msg = "must be one of";
        for (const char* a : allowed)
            msg += std::string(" ") + a;
        range_error(*e, msg);
    }

private:
    const kv::Section& s_;
};

const char* nonneg(double x) { return x >= 0.0 ? nullptr : "must be >= 0"; }
const char* positive(double x) { return x > 0.0 ? nullptr : "must be > 0"; }
const char* unit_open(double x) { return x > 0.0 && x < 1.0 ? nullptr : "must be in (0, 1)"; }
const char* finite(double x) { return std::isfinite(x) ? nullptr : "must be finite"; }

constexpr std::int64_t max_N = 1 << 16;
constexpr std::int64_t max_replicas = 1 << 24;

LawSpec read_law(const kv::Section& s)
{
    const auto* kind_entry = s.find("kind");
    const std::string kind = kind_entry ? kind_entry->value : "power_law";
    LawSpec spec;
    spec.kind = kind;
    if (kind == "power_law") {
        Reader r(s, {"kind", "alpha", "k_infinity", "n_table"});
        spec.alpha = r.real("alpha", 0.5, positive);
        spec.k_infinity = r.real("k_infinity", 0.0, [](double x) -> const char* {
            return x >= 0.0 && x < 1.0 ? nullptr : "must be in [0, 1)";
        });
        spec.n_table = r.integer("n_table", 1024, 1, max_N);
    } else if (kind == "srw") {
        Reader r(s, {"kind", "n_table"});
        spec.alpha = 0.5;
        spec.n_table = r.integer("n_table", 1024, 2, max_N);
    } else if (kind == "explicit") {
        Reader r(s, {"kind", "table", "k_infinity"});
        r.require("table");
        spec.table = r.list("table", {}, nonneg);
        spec.k_infinity = r.real("k_infinity", 0.0, [](double x) -> const char* {
            return x >= 0.0 && x < 1.0 ? nullptr : "must be in [0, 1)";
        });
        spec.alpha = 0.0;
        spec.n_table = static_cast<std::int64_t>(spec.table.size());
    } else if (kind == "serialized") {
        // rebuild the law block with the original line numbers
        std::string text;
        std::size_t line = 1;
        for (const auto& e : s.entries) {
            if (e.key == "kind")
                continue;
            while (line < e.line) {
                text += "\n";
                ++line;
            }
            text += e.key + " = " + e.value + "\n";
            ++line;
        }
        spec.law = law_from_text(text);
        spec.alpha = spec.law->alpha;
        spec.k_infinity = spec.law->k_infinity;
        spec.n_table = spec.law->n_table();
    } else {
        range_error(*kind_entry, "must be one of power_law srw explicit serialized");
    }
    return spec;
}

} // namespace

InterArrivalLaw build_law(const LawSpec& spec)
{
    if (spec.kind == "power_law")
        return make_power_law(spec.alpha, spec.k_infinity, spec.n_table);
    if (spec.kind == "srw")
        return make_srw_law(spec.n_table);
    if (spec.kind == "explicit")
        return make_explicit(spec.table, spec.k_infinity);
    if (spec.kind == "serialized" && spec.law)
        return *spec.law;
    throw ConfigError("unknown law kind '" + spec.kind + "'", 0, 0, "kind");
}

ExperimentConfig parse_config(std::string_view text)
{
    const auto doc = kv::parse(text);
    ExperimentConfig cfg;
    static const std::set<std::string> allowed = {"law",      "run",       "homog",  "quenched",
                                                  "certify",  "variance",  "smoothing", "sample",
                                                  "scan"};
    for (const auto& s : doc.sections) {
        if (s.name.empty() && s.entries.empty())
            continue;
        if (!allowed.count(s.name))
            throw ConfigError("line " + std::to_string(s.line) + ": unknown section [" + s.name + "]",
                              s.line, 1, s.name);
    }

    const auto* law = doc.find("law");
    if (!law)
        throw ConfigError("missing section [law]", 0, 0, "law");
    cfg.law = read_law(*law);

    if (const auto* run = doc.find("run")) {
        Reader r(*run, {"mode", "seed"});
        if (const auto* e = r.find("mode")) {
            if (std::find(experiment_modes().begin(), experiment_modes().end(), e->value) ==
                experiment_modes().end())
                range_error(*e, "must be one of homog quenched certify variance smoothing sample scan");
            cfg.mode = e->value;
        }
        if (const auto* e = r.find("seed"))
            cfg.seed = kv::to_u64(*e);
    }

    if (const auto* s = doc.find("homog")) {
        Reader r(*s, {"h"});
        r.require("h");
        cfg.homog = HomogParams{r.list("h", {}, finite)};
    }
    if (const auto* s = doc.find("quenched")) {
        Reader r(*s, {"beta", "h", "N", "replicas"});
        QuenchedParams p;
        p.beta = r.real("beta", p.beta, nonneg);
        p.h = r.real("h", p.h, finite);
        p.N = r.integer("N", p.N, 1, max_N);
        p.replicas = static_cast<int>(r.integer("replicas", p.replicas, 2, max_replicas));
        cfg.quenched = p;
    }
    if (const auto* s = doc.find("certify")) {
        Reader r(*s, {"beta", "h", "method", "gamma", "k", "gammas", "max_k", "replicas", "shift_a",
                      "decay_check", "check_N", "check_replicas"});
        CertifyParams p;
        p.beta = r.real("beta", p.beta, nonneg);
        p.h = r.real("h", p.h, finite);
        p.method = r.word("method", p.method, {"simple", "iterated", "search"});
        p.gamma = r.real("gamma", p.gamma, unit_open);
        p.k = r.integer("k", p.k, 1, max_N);
        p.gammas = r.list("gammas", p.gammas, unit_open);
        p.max_k = r.integer("max_k", p.max_k, 1, max_N);
        p.replicas = static_cast<int>(r.integer("replicas", p.replicas, 2, max_replicas));
        p.shift_a = r.list("shift_a", p.shift_a, unit_open);
        p.decay_check = r.boolean("decay_check", p.decay_check);
        p.check_N = r.integer("check_N", p.check_N, 0, max_N);
        p.check_replicas = static_cast<int>(r.integer("check_replicas", p.check_replicas, 2, max_replicas));
        cfg.certify = p;
    }
    if (const auto* s = doc.find("variance")) {
        Reader r(*s, {"beta", "N", "replicas"});
        VarianceParams p;
        p.beta = r.real("beta", p.beta, nonneg);
        p.N = r.integer("N", p.N, 1, max_N);
        p.replicas = static_cast<int>(r.integer("replicas", p.replicas, 2, max_replicas));
        cfg.variance = p;
    }
    if (const auto* s = doc.find("smoothing")) {
        Reader r(*s, {"beta", "deltas", "N", "replicas", "bracket_left", "bracket_right", "scan_h",
                      "scan_N", "scan_replicas", "threshold"});
        SmoothingParams p;
        p.beta = r.real("beta", p.beta, positive);
        p.deltas = r.list("deltas", p.deltas, positive);
        p.N = r.integer("N", p.N, 1, max_N);
        p.replicas = static_cast<int>(r.integer("replicas", p.replicas, 2, max_replicas));
        p.bracket_left = r.optional_real("bracket_left");
        p.bracket_right = r.optional_real("bracket_right");
        p.scan_h = r.list("scan_h", {}, finite);
        p.scan_N = r.integer("scan_N", p.scan_N, 1, max_N);
        p.scan_replicas = static_cast<int>(r.integer("scan_replicas", p.scan_replicas, 2, max_replicas));
        p.threshold = r.real("threshold", p.threshold, positive);
        if (!p.bracket_right && p.scan_h.empty())
            throw ConfigError("line " + std::to_string(s->line) +
                                  ": [smoothing] needs bracket_right or scan_h",
                              s->line, 0, "scan_h");
        cfg.smoothing = p;
    }
    if (const auto* s = doc.find("sample")) {
        Reader r(*s, {"beta", "h", "N", "count"});
        SampleParams p;
        p.beta = r.real("beta", p.beta, nonneg);
        p.h = r.real("h", p.h, finite);
        p.N = r.integer("N", p.N, 1, max_N);
        p.count = static_cast<int>(r.integer("count", p.count, 1, max_replicas));
        cfg.sample = p;
    }
    if (const auto* s = doc.find("scan")) {
        Reader r(*s, {"beta", "h", "N", "replicas", "threshold", "certified_left"});
        ScanParams p;
        p.beta = r.real("beta", p.beta, nonneg);
        r.require("h");
        p.h = r.list("h", {}, finite);
        p.N = r.integer("N", p.N, 1, max_N);
        p.replicas = static_cast<int>(r.integer("replicas", p.replicas, 2, max_replicas));
        p.threshold = r.real("threshold", p.threshold, positive);
        p.certified_left = r.optional_real("certified_left");
        cfg.scan = p;
    }
    return cfg;
}

std::string to_text(const ExperimentConfig& c)
{
    using kv::format_double;
    using kv::format_double_list;
    std::string out = "[law]\nkind = " + c.law.kind + "\n";
    if (c.law.kind == "power_law") {
        out += "alpha = " + format_double(c.law.alpha) + "\n";
        out += "k_infinity = " + format_double(c.law.k_infinity) + "\n";
        out += "n_table = " + std::to_string(c.law.n_table) + "\n";
    } else if (c.law.kind == "srw") {
        out += "n_table = " + std::to_string(c.law.n_table) + "\n";
    } else if (c.law.kind == "explicit") {
        out += "table = " + format_double_list(c.law.table) + "\n";
        out += "k_infinity = " + format_double(c.law.k_infinity) + "\n";
    } else if (c.law.law) {
        out += to_text(*c.law.law);
    }
    out += "\n[run]\n";
    if (!c.mode.empty())
        out += "mode = " + c.mode + "\n";
    out += "seed = " + std::to_string(c.seed) + "\n";

    auto num = [](const char* k, double v) { return std::string(k) + " = " + format_double(v) + "\n"; };
    auto integer = [](const char* k, std::int64_t v) {
        return std::string(k) + " = " + std::to_string(v) + "\n";
    };
    auto list = [](const char* k, const std::vector<double>& v) {
        return std::string(k) + " = " + format_double_list(v) + "\n";
    };
    if (c.homog)
        out += "\n[homog]\n" + list("h", c.homog->h);
    if (const auto& p = c.quenched)
        out += "\n[quenched]\n" + num("beta", p->beta) + num("h", p->h) + integer("N", p->N) +
               integer("replicas", p->replicas);
    if (const auto& p = c.certify)
        out += "\n[certify]\n" + num("beta", p->beta) + num("h", p->h) + "method = " + p->method +
               "\n" + num("gamma", p->gamma) + integer("k", p->k) + list("gammas", p->gammas) +
               integer("max_k", p->max_k) + integer("replicas", p->replicas) +
               list("shift_a", p->shift_a) + "decay_check = " + (p->decay_check ? "true" : "false") +
               "\n" + integer("check_N", p->check_N) + integer("check_replicas", p->check_replicas);
    if (const auto& p = c.variance)
        out += "\n[variance]\n" + num("beta", p->beta) + integer("N", p->N) +
               integer("replicas", p->replicas);
    if (const auto& p = c.smoothing) {
        out += "\n[smoothing]\n" + num("beta", p->beta) + list("deltas", p->deltas) +
               integer("N", p->N) + integer("replicas", p->replicas);
        if (p->bracket_left)
            out += num("bracket_left", *p->bracket_left);
        if (p->bracket_right)
            out += num("bracket_right", *p->bracket_right);
        if (!p->scan_h.empty())
            out += list("scan_h", p->scan_h);
        out += integer("scan_N", p->scan_N) + integer("scan_replicas", p->scan_replicas) +
               num("threshold", p->threshold);
    }
    if (const auto& p = c.sample)
        out += "\n[sample]\n" + num("beta", p->beta) + num("h", p->h) + integer("N", p->N) +
               integer("count", p->count);
    if (const auto& p = c.scan) {
        out += "\n[scan]\n" + num("beta", p->beta) + list("h", p->h) + integer("N", p->N) +
               integer("replicas", p->replicas) + num("threshold", p->threshold);
        if (p->certified_left)
            out += num("certified_left", *p->certified_left);
    }
    return out;
}

} // namespace pinlab
