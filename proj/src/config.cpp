#include "margex/config.hpp"

#include "margex/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace margex {

namespace {

struct Section {
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }
};

using Ini = std::vector<std::pair<std::string, Section>>;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw Error(ErrorKind::Parse, origin + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

Ini parse_ini(const std::string& text, const std::string& origin) {
    Ini ini;
    Section* current = nullptr;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        if (t.front() == '[') {
            if (t.back() != ']') fail(where, "unterminated section header '" + t + "'");
            const std::string name = trim(t.substr(1, t.size() - 2));
            if (name.empty()) fail(where, "empty section name");
            for (const auto& [n, _] : ini)
                if (n == name) fail(where, "duplicate section [" + name + "]");
            ini.emplace_back(name, Section{});
            current = &ini.back().second;
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) fail(where, "expected key = value, got '" + t + "'");
        if (!current) fail(where, "key outside any section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) fail(where, "empty key");
        if (current->find(key)) fail(where, "duplicate key '" + key + "'");
        current->entries.emplace_back(key, value);
    }
    return ini;
}

std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

double to_double(const std::string& s, const std::string& ctx) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, ctx + ": bad number '" + s + "'");
    }
}

int64_t to_int(const std::string& s, const std::string& ctx) {
    try {
        size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, ctx + ": bad integer '" + s + "'");
    }
}

uint64_t to_uint(const std::string& s, const std::string& ctx) {
    try {
        size_t pos = 0;
        unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, ctx + ": bad unsigned integer '" + s + "'");
    }
}

bool to_bool(const std::string& s, const std::string& ctx) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw Error(ErrorKind::Parse, ctx + ": bad boolean '" + s + "'");
}

std::vector<double> to_doubles(const std::string& s, const std::string& ctx) {
    std::vector<double> out;
    for (const auto& t : tokens(s)) out.push_back(to_double(t, ctx));
    return out;
}

void reject_unknown_keys(const Section& sec, const std::string& name,
                         const std::vector<std::string>& allowed,
                         const std::string& origin) {
    for (const auto& [k, _] : sec.entries)
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            fail(origin, "unknown key '" + k + "' in section [" + name + "]");
}

const std::string& require(const Section& sec, const std::string& section,
                           const std::string& key, const std::string& origin) {
    const std::string* v = sec.find(key);
    if (!v) fail(origin, "section [" + section + "] is missing key '" + key + "'");
    return *v;
}

HiringFunction parse_hiring(const std::string& value, const std::string& ctx) {
    const auto tok = tokens(value);
    if (tok.empty()) throw Error(ErrorKind::Parse, ctx + ": empty hiring function");
    if (tok[0] == "logistic") {
        if (tok.size() != 3)
            throw Error(ErrorKind::Parse, ctx + ": logistic needs 'logistic a b'");
        return HiringFunction::logistic(to_double(tok[1], ctx), to_double(tok[2], ctx));
    }
    if (tok[0] == "ratio_shift") {
        if (tok.size() != 2)
            throw Error(ErrorKind::Parse, ctx + ": ratio_shift needs 'ratio_shift c'");
        return HiringFunction::ratio_shift(to_double(tok[1], ctx));
    }
    if (tok[0] == "piecewise") {
        std::vector<double> grid, values;
        for (size_t i = 1; i < tok.size(); ++i) {
            const size_t colon = tok[i].find(':');
            if (colon == std::string::npos)
                throw Error(ErrorKind::Parse,
                            ctx + ": piecewise entries are 'theta:value', got '" +
                                tok[i] + "'");
            grid.push_back(to_double(tok[i].substr(0, colon), ctx));
            values.push_back(to_double(tok[i].substr(colon + 1), ctx));
        }
        return HiringFunction::piecewise(std::move(grid), std::move(values));
    }
    throw Error(ErrorKind::Parse, ctx + ": unknown hiring family '" + tok[0] + "'");
}

OutcomeFunction parse_outcome(const std::string& value, const std::string& ctx) {
    const auto c = to_doubles(value, ctx);
    if (c.size() != 3)
        throw Error(ErrorKind::Parse, ctx + ": outcome needs 3 coefficients 'c0 c1 c2'");
    return OutcomeFunction(c[0], c[1], c[2]);
}

CovariateModel parse_covariate(const std::string& value, const std::string& ctx) {
    const auto tok = tokens(value);
    if (tok.empty()) throw Error(ErrorKind::Parse, ctx + ": empty covariate spec");
    if (tok[0] == "identity") {
        if (tok.size() != 1)
            throw Error(ErrorKind::Parse, ctx + ": identity takes no parameters");
        return CovariateModel::identity();
    }
    if (tok[0] == "binned") {
        if (tok.size() != 2)
            throw Error(ErrorKind::Parse, ctx + ": binned needs 'binned B'");
        return CovariateModel::binned(static_cast<int>(to_int(tok[1], ctx)));
    }
    if (tok[0] == "noisy") {
        if (tok.size() != 2)
            throw Error(ErrorKind::Parse, ctx + ": noisy needs 'noisy sd'");
        return CovariateModel::noisy_proxy(to_double(tok[1], ctx));
    }
    throw Error(ErrorKind::Parse, ctx + ": unknown covariate mode '" + tok[0] + "'");
}

DGPSpec parse_dgp(const Section& sec, const std::string& origin) {
    const std::string family = require(sec, "dgp", "distribution", origin);

    std::vector<std::string> allowed = {"distribution", "p0", "p1", "y0", "y1",
                                        "covariate"};
    ProductivityDistribution dist = ProductivityDistribution::exponential(1.0);
    if (family == "lognormal") {
        allowed.push_back("mu");
        allowed.push_back("sigma");
        dist = ProductivityDistribution::log_normal(
            to_double(require(sec, "dgp", "mu", origin), origin),
            to_double(require(sec, "dgp", "sigma", origin), origin));
    } else if (family == "exponential") {
        allowed.push_back("rate");
        dist = ProductivityDistribution::exponential(
            to_double(require(sec, "dgp", "rate", origin), origin));
    } else if (family == "discrete") {
        allowed.push_back("support");
        allowed.push_back("masses");
        dist = ProductivityDistribution::discrete(
            to_doubles(require(sec, "dgp", "support", origin), origin),
            to_doubles(require(sec, "dgp", "masses", origin), origin));
    } else {
        fail(origin, "unknown distribution family '" + family + "'");
    }
    reject_unknown_keys(sec, "dgp", allowed, origin);

    return DGPSpec(std::move(dist),
                   parse_hiring(require(sec, "dgp", "p0", origin), origin + " [dgp] p0"),
                   parse_hiring(require(sec, "dgp", "p1", origin), origin + " [dgp] p1"),
                   parse_outcome(require(sec, "dgp", "y0", origin), origin + " [dgp] y0"),
                   parse_outcome(require(sec, "dgp", "y1", origin), origin + " [dgp] y1"),
                   parse_covariate(require(sec, "dgp", "covariate", origin),
                                   origin + " [dgp] covariate"));
}

std::vector<EstimatorId> parse_estimator_list(const std::string& value,
                                              const std::string& ctx) {
    std::vector<EstimatorId> out;
    for (const auto& t : tokens(value)) {
        if (t == "omd") out.push_back(EstimatorId::Omd);
        else if (t == "ipw") out.push_back(EstimatorId::IpwPate);
        else if (t == "psm_pre") out.push_back(EstimatorId::PsmPre);
        else if (t == "psm_post") out.push_back(EstimatorId::PsmPost);
        else if (t == "marginality") out.push_back(EstimatorId::Marginality);
        else throw Error(ErrorKind::Parse, ctx + ": unknown estimator '" + t + "'");
    }
    if (out.empty())
        throw Error(ErrorKind::Parse, ctx + ": estimator list is empty");
    return out;
}

std::vector<EstimatorId> all_estimators() {
    return {EstimatorId::Omd, EstimatorId::IpwPate, EstimatorId::PsmPre,
            EstimatorId::PsmPost, EstimatorId::Marginality};
}

void parse_estimator_options(const Section& sec, const std::string& origin,
                             EstimatorOptions& opt) {
    if (const auto* v = sec.find("propensity")) {
        if (*v == "logistic") opt.propensity = EstimatorOptions::Propensity::Logistic;
        else if (*v == "binned") opt.propensity = EstimatorOptions::Propensity::Binned;
        else if (*v == "oracle") opt.propensity = EstimatorOptions::Propensity::Oracle;
        else fail(origin, "unknown propensity kind '" + *v + "'");
    }
    if (const auto* v = sec.find("trim")) opt.trim = to_double(*v, origin);
    if (const auto* v = sec.find("caliper")) opt.caliper = to_double(*v, origin);
    if (const auto* v = sec.find("cells"))
        opt.bin.cells = static_cast<int>(to_int(*v, origin));
    if (const auto* v = sec.find("min_cell"))
        opt.bin.min_participants = static_cast<int>(to_int(*v, origin));
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    const Ini ini = parse_ini(text, origin);
    RunConfig rc;

    for (const auto& [name, sec] : ini) {
        if (name == "dgp") {
            rc.dgp = parse_dgp(sec, origin);
        } else if (name == "sample") {
            reject_unknown_keys(sec, name, {"n_pre", "n_post", "seed", "reveal_theta"},
                                origin);
            SampleConfig sc;
            sc.n_pre = to_int(require(sec, name, "n_pre", origin), origin);
            sc.n_post = to_int(require(sec, name, "n_post", origin), origin);
            sc.seed = to_uint(require(sec, name, "seed", origin), origin);
            if (const auto* v = sec.find("reveal_theta"))
                sc.reveal_theta = to_bool(*v, origin);
            sc.validate();
            rc.sample = sc;
        } else if (name == "estimate") {
            reject_unknown_keys(sec, name,
                                {"estimators", "propensity", "trim", "caliper", "cells",
                                 "min_cell", "bootstrap_b", "bootstrap_seed"},
                                origin);
            RunConfig::Estimate est;
            est.estimators = sec.find("estimators")
                                 ? parse_estimator_list(*sec.find("estimators"), origin)
                                 : all_estimators();
            parse_estimator_options(sec, origin, est.options);
            if (const auto* v = sec.find("bootstrap_b"))
                est.bootstrap_b = static_cast<int>(to_int(*v, origin));
            if (const auto* v = sec.find("bootstrap_seed"))
                est.bootstrap_seed = to_uint(*v, origin);
            if (est.bootstrap_b < 1)
                fail(origin, "bootstrap_b must be >= 1");
            est.options.bin.validate();
            rc.estimate = std::move(est);
        } else if (name == "study") {
            reject_unknown_keys(sec, name,
                                {"r", "n", "seed", "estimators", "propensity", "trim",
                                 "caliper", "cells", "min_cell", "replicate_dump"},
                                origin);
            RunConfig::Study st;
            st.config.replications = to_int(require(sec, name, "r", origin), origin);
            st.config.n = to_int(require(sec, name, "n", origin), origin);
            st.config.master_seed = to_uint(require(sec, name, "seed", origin), origin);
            st.config.estimators = sec.find("estimators")
                                       ? parse_estimator_list(*sec.find("estimators"),
                                                              origin)
                                       : all_estimators();
            parse_estimator_options(sec, origin, st.config.options);
            if (const auto* v = sec.find("replicate_dump")) st.replicate_dump = *v;
            st.config.validate();
            st.config.options.bin.validate();
            rc.study = std::move(st);
        } else if (name == "dichotomy") {
            reject_unknown_keys(sec, name, {"p_threshold"}, origin);
            rc.dichotomy_threshold =
                to_double(require(sec, name, "p_threshold", origin), origin);
        } else {
            fail(origin, "unknown section [" + name + "]");
        }
    }
    return rc;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

} // namespace margex
