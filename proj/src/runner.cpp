#include "pinlab/cli.hpp"

#include "pinlab/bounds.hpp"
#include "pinlab/errors.hpp"
#include "pinlab/homogeneous.hpp"
#include "pinlab/kv.hpp"
#include "pinlab/quenched.hpp"
#include "pinlab/random.hpp"
#include "pinlab/sampler.hpp"
#include "pinlab/smoothing.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace pinlab {

namespace {

using nlohmann::json;

std::string commented(const std::string& text)
{
    std::string out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        out += line.empty() ? "#\n" : "# " + line + "\n";
    return out;
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

class Writer {
public:
    Writer(const ExperimentConfig& cfg, const RunOptions& opt, RunResult& res)
        : config_text_(to_text(cfg)), dir_(opt.out_dir), res_(res)
    {
        std::filesystem::create_directories(dir_);
    }

    json record(const std::string& artifact) const
    {
        json j;
        j["artifact"] = artifact;
        j["config"] = config_text_;
        return j;
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void write_csv(const std::string& name, const std::string& csv)
    {
        write(name, commented(config_text_) + csv);
    }

private:
    void write(const std::string& name, const std::string& content)
    {
        const auto path = (dir_ / name).string();
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot open " + path + " for writing");
        f << content;
        if (!f)
            throw std::runtime_error("write failed for " + path);
        res_.artifacts.push_back(path);
    }

    std::string config_text_;
    std::filesystem::path dir_;
    RunResult& res_;
};

json certificate_json(const Certificate& c) { return json::parse(to_json(c)); }

const char* missing_section(const std::string& mode)
{
    static std::string msg;
    msg = "mode '" + mode + "' needs a [" + mode + "] section";
    return msg.c_str();
}

void run_homog(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w)
{
    const auto rows = homogeneous_grid(law, cfg.homog->h);
    w.write_csv("homog.csv", to_csv(rows));
    auto j = w.record("homog");
    j["hc0"] = hc0(law);
    if (!law.has_tail() || law.alpha != 1.0) {
        const auto a = critical_asymptotics(law);
        j["critical_exponent"] = a.exponent;
        j["critical_constant"] = a.constant;
    }
    auto& out = j["rows"] = json::array();
    for (const auto& r : rows)
        out.push_back({{"h", r.h},
                       {"F", r.free_energy},
                       {"contact_fraction", r.contact_fraction},
                       {"correlation_length", optional_json(r.correlation_length)}});
    w.write_json("homog.json", j);
}

ExitCode run_quenched(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w,
                      const RunOptions& opt, std::string& message)
{
    const auto& p = *cfg.quenched;
    const auto e = free_energy_mc(law, p.beta, p.h, p.N, p.replicas, cfg.seed, opt.threads);
    const auto ann = annealed_reference(law, p.beta, p.h);
    auto j = w.record("quenched");
    j["law"] = to_text(law);
    j["beta"] = p.beta;
    j["h"] = p.h;
    j["N"] = p.N;
    j["replicas"] = p.replicas;
    j["seed"] = cfg.seed;
    j["value"] = e.value;
    j["std_error"] = e.std_error;
    j["lower_bound_certified"] = e.lower_bound_certified;
    j["F_ann"] = ann.F_ann;
    j["hc_ann"] = ann.hc_ann;
    auto& certs = j["certificates"] = json::array();
    ExitCode code = ExitCode::ok;
    const double gmin = law.has_tail() ? 1.0 / (1.0 + law.alpha) : 0.0;
    for (double g : {0.6, 0.7, 0.8, 0.9}) {
        if (!(g > gmin))
            continue;
        const auto c = simple_certificate(law, p.beta, p.h, g);
        certs.push_back({{"kind", "simple"},
                         {"grade", "rigorous"},
                         {"gamma", g},
                         {"rho", c.rho},
                         {"verdict", to_string(c.verdict)}});
        if (c.certified() && e.value > 3.0 * e.std_error) {
            code = ExitCode::contradiction;
            message = "certificate at gamma " + kv::format_double(g) +
                      " contradicts the measured free energy";
        }
    }
    j["contradiction"] = code == ExitCode::contradiction;
    w.write_json("quenched.json", j);
    return code;
}

ExitCode run_certify(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w,
                     const RunOptions& opt, std::string& message)
{
    const auto& p = *cfg.certify;
    IteratedOptions io;
    io.replicas = p.replicas;
    io.seed = cfg.seed;
    io.threads = opt.threads;
    io.shift_a = p.shift_a;
    io.decay_check = p.decay_check;
    io.max_k = p.max_k;

    std::vector<Certificate> certs;
    auto j = w.record("certify");
    j["method"] = p.method;
    if (p.method == "simple") {
        certs.push_back(simple_certificate(law, p.beta, p.h, p.gamma));
    } else if (p.method == "iterated") {
        auto it = iterated_certificate(law, p.beta, p.h, p.gamma, p.k, io);
        certs.push_back(std::move(it.statistical));
        certs.push_back(std::move(it.rigorous));
    } else {
        SearchOptions so;
        so.gamma_grid = p.gammas;
        so.max_k = p.max_k;
        so.iterated = io;
        auto res = search_certificate(law, p.beta, p.h, so);
        auto& cand = j["candidates"] = json::array();
        for (const auto& c : res.candidates)
            cand.push_back({{"gamma", c.gamma},
                            {"k", c.k},
                            {"grade", to_string(c.grade)},
                            {"rho", c.rho},
                            {"verdict", to_string(c.verdict)}});
        if (res.best_statistical)
            certs.push_back(*res.best_statistical);
        if (res.best_rigorous)
            certs.push_back(*res.best_rigorous);
    }
    auto& out = j["certificates"] = json::array();
    bool any = false;
    for (const auto& c : certs) {
        out.push_back(certificate_json(c));
        any = any || c.certified();
    }
    ExitCode code = ExitCode::ok;
    if (any && p.check_N > 0) {
        const auto e = free_energy_mc(law, p.beta, p.h, p.check_N, p.check_replicas,
                                      stream_seed(cfg.seed, 0xc0de), opt.threads);
        bool ok = true;
        for (const auto& c : certs) {
            try {
                check_consistency(c, e);
            } catch (const CertificateContradiction& ex) {
                ok = false;
                message = ex.what();
            }
        }
        j["consistency"] = {{"N", p.check_N},
                            {"replicas", p.check_replicas},
                            {"value", e.value},
                            {"std_error", e.std_error},
                            {"ok", ok}};
        if (!ok)
            code = ExitCode::contradiction;
    }
    w.write_json("certify.json", j);
    return code;
}

void run_variance(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w,
                  const RunOptions& opt)
{
    const auto& p = *cfg.variance;
    const auto v = variance_at_annealed_critical(law, p.beta, p.N, p.replicas, cfg.seed, opt.threads);
    auto j = w.record("variance");
    j["beta"] = v.beta;
    j["N"] = v.N;
    j["replicas"] = v.replicas;
    j["seed"] = cfg.seed;
    j["mc_mean"] = v.mc_mean;
    j["mc_variance"] = v.mc_variance;
    j["mc_std_error"] = v.mc_std_error;
    j["exact_variance"] = v.exact_variance;
    j["gamma2"] = optional_json(v.gamma2);
    j["beta0"] = optional_json(v.beta0);
    j["analytic_limit"] = optional_json(v.analytic_limit);
    j["divergent"] = v.divergent;
    w.write_json("variance.json", j);
}

json scan_rows_json(const std::vector<ScanRow>& rows)
{
    auto out = json::array();
    for (const auto& r : rows)
        out.push_back({{"h", r.h},
                       {"mean_log_z", r.mean_log_z},
                       {"std_error", r.std_error},
                       {"localized", r.localized}});
    return out;
}

json bracket_json(const CriticalBracket& b)
{
    return {{"left", b.left},
            {"right", optional_json(b.right)},
            {"hc_ann", b.hc_ann},
            {"hc0", b.hc0},
            {"width", b.right ? json(b.width()) : json(nullptr)}};
}

void run_smoothing(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w,
                   const RunOptions& opt)
{
    const auto& p = *cfg.smoothing;
    CriticalBracket b;
    b.hc0 = hc0(law);
    b.hc_ann = b.hc0 - 0.5 * p.beta * p.beta;
    std::optional<ScanResult> scan;
    if (p.bracket_right) {
        b.left = p.bracket_left ? *p.bracket_left : b.hc_ann;
        b.right = *p.bracket_right;
    } else {
        scan = critical_scan(law, p.beta, p.scan_h, p.scan_N, p.scan_replicas, p.threshold,
                             cfg.seed, p.bracket_left, opt.threads);
        b = scan->bracket;
    }
    const auto rep = smoothing_check(law, p.beta, b, p.deltas, p.N, p.replicas,
                                     stream_seed(cfg.seed, 1), opt.threads);
    auto j = w.record("smoothing");
    auto body = json::parse(to_json(rep));
    for (auto it = body.begin(); it != body.end(); ++it)
        j[it.key()] = it.value();
    j["bracket"] = bracket_json(b);
    if (scan)
        j["scan_rows"] = scan_rows_json(scan->rows);
    w.write_json("smoothing.json", j);
}

void run_sample(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w,
                const RunOptions& opt)
{
    const auto& p = *cfg.sample;
    const auto d = sample_disorder(stream_seed(cfg.seed, 0), p.N, p.beta, p.h);
    const auto paths = sample_paths(law, d, p.N, p.count, stream_seed(cfg.seed, 1), opt.threads);
    const auto stats = contact_statistics(paths);
    auto j = w.record("sample");
    j["N"] = p.N;
    j["count"] = p.count;
    j["fraction_mean"] = stats.fraction_mean;
    j["fraction_se"] = stats.fraction_se;
    j["profile"] = stats.profile;
    auto& sets = j["contact_sets"] = json::array();
    for (const auto& s : paths)
        sets.push_back(s.points);
    w.write_json("sample.json", j);
    w.write_csv("sample.csv", occupation_csv(paths));
}

void run_scan(const ExperimentConfig& cfg, const InterArrivalLaw& law, Writer& w,
              const RunOptions& opt)
{
    const auto& p = *cfg.scan;
    const auto res = critical_scan(law, p.beta, p.h, p.N, p.replicas, p.threshold, cfg.seed,
                                   p.certified_left, opt.threads);
    w.write_csv("scan.csv", to_csv(res.rows));
    auto j = w.record("scan");
    j["beta"] = p.beta;
    j["N"] = p.N;
    j["replicas"] = p.replicas;
    j["bracket"] = bracket_json(res.bracket);
    j["rows"] = scan_rows_json(res.rows);
    w.write_json("scan.json", j);
}

} // namespace

RunResult run(const ExperimentConfig& cfg, const RunOptions& opt)
{
    RunResult res;
    try {
        if (cfg.mode.empty())
            throw ConfigError("no mode given", 0, 0, "mode");
        const std::map<std::string, bool> present = {
            {"homog", cfg.homog.has_value()},         {"quenched", cfg.quenched.has_value()},
            {"certify", cfg.certify.has_value()},     {"variance", cfg.variance.has_value()},
            {"smoothing", cfg.smoothing.has_value()}, {"sample", cfg.sample.has_value()},
            {"scan", cfg.scan.has_value()}};
        const auto it = present.find(cfg.mode);
        if (it == present.end())
            throw ConfigError("unknown mode '" + cfg.mode + "'", 0, 0, "mode");
        if (!it->second)
            throw ConfigError(missing_section(cfg.mode), 0, 0, cfg.mode);

        const auto law = build_law(cfg.law);
        Writer w(cfg, opt, res);
        if (cfg.mode == "homog")
            run_homog(cfg, law, w);
        else if (cfg.mode == "quenched")
            res.code = run_quenched(cfg, law, w, opt, res.message);
        else if (cfg.mode == "certify")
            res.code = run_certify(cfg, law, w, opt, res.message);
        else if (cfg.mode == "variance")
            run_variance(cfg, law, w, opt);
        else if (cfg.mode == "smoothing")
            run_smoothing(cfg, law, w, opt);
        else if (cfg.mode == "sample")
            run_sample(cfg, law, w, opt);
        else
            run_scan(cfg, law, w, opt);
    } catch (const ConfigError& e) {
        res.code = ExitCode::config;
        res.message = e.what();
    } catch (const ResourceLimit& e) {
        res.code = ExitCode::resource;
        res.message = e.what();
    } catch (const CertificateContradiction& e) {
        res.code = ExitCode::contradiction;
        res.message = e.what();
    } catch (const std::exception& e) {
        res.code = ExitCode::failure;
        res.message = e.what();
    }
    return res;
}

Digest report_digest(const std::vector<std::string>& paths)
{
    const auto fmt = [](double x) { return kv::format_double(x + 0.0); };
    if (paths.empty())
        throw ConfigError("digest: no artifacts given");
    struct Cert {
        double beta, h, gamma, rho;
        std::int64_t k;
        std::string kind, grade, verdict;
    };
    std::map<double, json> brackets;
    std::vector<Cert> certs;
    std::vector<std::string> smoothing_lines, other_lines, flags;

    for (const auto& path : paths) {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("digest: cannot read " + path);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw std::runtime_error("digest: " + path + " is not valid JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("artifact"))
            throw std::runtime_error("digest: " + path + " is not a pinlab artifact");
        const std::string kind = j["artifact"];
        try {
            if (kind == "scan") {
                brackets[j["beta"].get<double>()] = j["bracket"];
            } else if (kind == "certify") {
                for (const auto& c : j["certificates"])
                    certs.push_back({c["beta"], c["h"], c["gamma"], c["rho"], c["k"], c["kind"],
                                     c["grade"], c["verdict"]});
                if (j.contains("consistency") && !j["consistency"]["ok"].get<bool>())
                    flags.push_back("CONTRADICTION " + path +
                                    ": certified point has F_mc above 3 sigma");
            } else if (kind == "smoothing") {
                brackets.emplace(j["beta"].get<double>(), j["bracket"]);
                for (const auto& r : j["rows"]) {
                    std::ostringstream s;
                    s << "beta " << kv::format_double(j["beta"]) << "  delta "
                      << kv::format_double(r["delta"]) << "  h " << kv::format_double(r["h"])
                      << "  F " << kv::format_double(r["F_mc"]) << " +- "
                      << kv::format_double(r["std_error"]) << "  bound "
                      << kv::format_double(r["bound"]) << "  " << r["verdict"].get<std::string>();
                    smoothing_lines.push_back(s.str());
                }
            } else if (kind == "quenched") {
                std::ostringstream s;
                s << "quenched beta " << kv::format_double(j["beta"]) << "  h "
                  << kv::format_double(j["h"]) << "  F " << kv::format_double(j["value"]) << " +- "
                  << kv::format_double(j["std_error"]) << "  F_ann " << kv::format_double(j["F_ann"]);
                other_lines.push_back(s.str());
                if (j["contradiction"].get<bool>())
                    flags.push_back("CONTRADICTION " + path + ": simple certificate vs measured F");
            } else {
                other_lines.push_back(kind + " " + path);
            }
        } catch (const json::exception& e) {
            throw std::runtime_error("digest: " + path + " is missing fields: " + e.what());
        }
    }

    std::ostringstream out;
    out << "critical curve: hc_ann <= certified <= hc <= bracket right <= hc0\n";
    out << "beta  hc_ann  certified  bracket_right  hc0\n";
    std::map<double, std::optional<Cert>> best;
    for (const auto& c : certs)
        if (c.verdict == "certified_delocalized") {
            auto& b = best[c.beta];
            if (!b || c.h > b->h)
                b = c;
        }
    std::set<double> betas;
    for (const auto& [beta, _] : brackets)
        betas.insert(beta);
    for (const auto& [beta, _] : best)
        betas.insert(beta);
    for (double beta : betas) {
        const double hc_ann_v = brackets.count(beta) ? brackets[beta]["hc_ann"].get<double>()
                                                     : std::numeric_limits<double>::quiet_NaN();
        std::optional<double> right;
        std::optional<double> hc0_v;
        if (brackets.count(beta)) {
            if (!brackets[beta]["right"].is_null())
                right = brackets[beta]["right"].get<double>();
            hc0_v = brackets[beta]["hc0"].get<double>();
        }
        const auto& b = best[beta];
        out << kv::format_double(beta) << "  " << (std::isnan(hc_ann_v) ? "-" : fmt(hc_ann_v))
            << "  " << (b ? kv::format_double(b->h) + " (" + b->grade + ")" : "-") << "  "
            << (right ? kv::format_double(*right) : "-") << "  "
            << (hc0_v ? fmt(*hc0_v) : "-") << "\n";
        if (b && right && b->h >= *right)
            flags.push_back("CONTRADICTION beta " + kv::format_double(beta) + ": certified h " +
                            kv::format_double(b->h) + " inside measured localized region (right " +
                            kv::format_double(*right) + ")");
    }
    if (!certs.empty()) {
        out << "\ncertificates\n";
        for (const auto& c : certs)
            out << "beta " << kv::format_double(c.beta) << "  h " << kv::format_double(c.h) << "  "
                << c.kind << "/" << c.grade << "  gamma " << kv::format_double(c.gamma) << "  k "
                << c.k << "  rho " << kv::format_double(c.rho) << "  " << c.verdict << "\n";
    }
    if (!smoothing_lines.empty()) {
        out << "\nsmoothing\n";
        for (const auto& l : smoothing_lines)
            out << l << "\n";
    }
    if (!other_lines.empty()) {
        out << "\nother\n";
        for (const auto& l : other_lines)
            out << l << "\n";
    }
    for (const auto& f : flags)
        out << f << "\n";
    return {out.str(), !flags.empty()};
}

} // namespace pinlab
