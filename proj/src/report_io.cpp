#include "margex/report_io.hpp"

#include "margex/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace margex {

namespace {

std::string g17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::pair<std::string, std::string>>
estimand_rows(const EstimandReport& rep, const std::optional<DichotomyReport>& dich) {
    std::vector<std::pair<std::string, std::string>> rows = {
        {"n0", g17(rep.n0)},
        {"n1", g17(rep.n1)},
        {"ybar0", g17(rep.ybar0)},
        {"ybar1", g17(rep.ybar1)},
        {"pate", g17(rep.pate)},
        {"tau_q0", g17(rep.tau_q0)},
        {"tau_q1", g17(rep.tau_q1)},
        {"tau_dp", rep.tau_dp ? g17(*rep.tau_dp) : "degenerate-weights"},
        {"omd", g17(rep.omd)},
        {"post_ate_term", g17(rep.post.ate_term)},
        {"post_selection_bias", g17(rep.post.selection_bias)},
        {"post_reweight_bias", g17(rep.post.reweight_bias)},
        {"pre_ate_term", g17(rep.pre.ate_term)},
        {"pre_selection_bias", g17(rep.pre.selection_bias)},
        {"pre_reweight_bias", g17(rep.pre.reweight_bias)},
    };
    if (dich) {
        rows.emplace_back("p_threshold", g17(dich->p_threshold));
        rows.emplace_back("theta_bar", g17(dich->theta_bar));
        rows.emplace_back("theta_bbar", g17(dich->theta_bbar));
        rows.emplace_back("tau_infra", g17(dich->tau_infra));
        rows.emplace_back("tau_mar", g17(dich->tau_mar));
        rows.emplace_back("counterfactual_flag",
                          dich->counterfactual_flag ? "true" : "false");
    }
    return rows;
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

} // namespace

void write_estimand_csv(const EstimandReport& rep,
                        const std::optional<DichotomyReport>& dich,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    out << "name,value\n";
    for (const auto& [k, v] : estimand_rows(rep, dich)) out << k << "," << v << "\n";
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing report to " + path);
}

std::string estimand_kv_text(const EstimandReport& rep,
                             const std::optional<DichotomyReport>& dich) {
    std::ostringstream os;
    for (const auto& [k, v] : estimand_rows(rep, dich)) os << k << " = " << v << "\n";
    return os.str();
}

void write_estimates_csv(const std::vector<EstimateResult>& rows,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    out << "estimand,point,se,n_used,n_dropped,warnings\n";
    for (const auto& r : rows) {
        std::string warnings;
        for (const auto& w : r.diag.warnings) {
            if (!warnings.empty()) warnings += "; ";
            warnings += w;
        }
        // Estimators either return a finite point or throw; a NaN point is
        // the failure marker assembled by the caller.
        out << r.estimand << "," << (std::isnan(r.point) ? "failed" : g17(r.point))
            << "," << (r.se ? g17(*r.se) : "") << "," << r.diag.n_used << ","
            << r.diag.n_dropped << "," << sanitize(warnings) << "\n";
    }
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing estimates to " + path);
}

} // namespace margex
