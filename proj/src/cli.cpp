#include "margex/cli.hpp"

#include "margex/config.hpp"
#include "margex/error.hpp"
#include "margex/mc.hpp"
#include "margex/parallel.hpp"
#include "margex/report_io.hpp"
#include "margex/rng.hpp"
#include "margex/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>

namespace margex {

namespace {

const DGPSpec& require_dgp(const RunConfig& rc, const std::string& config_path) {
    if (!rc.dgp)
        throw Error(ErrorKind::Validation,
                    config_path + ": section [dgp] is required for this command");
    return *rc.dgp;
}

void require_valid(const DGPSpec& spec) {
    const auto report = validate_spec(spec);
    if (!report.ok())
        throw Error(ErrorKind::Validation, "invalid model: " + report.joined());
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const Error& e) {
        std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what()
                  << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int cmd_oracle(const std::string& config_path, const std::string& out_path) {
    return guarded([&] {
        const RunConfig rc = parse_config_file(config_path);
        const DGPSpec& spec = require_dgp(rc, config_path);
        require_valid(spec);

        const EstimandReport rep = compute_report(spec);
        std::optional<DichotomyReport> dich;
        if (rc.dichotomy_threshold)
            dich = dichotomy_analysis(spec, *rc.dichotomy_threshold);

        write_estimand_csv(rep, dich, out_path);
        std::cout << estimand_kv_text(rep, dich);
    });
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    return guarded([&] {
        const RunConfig rc = parse_config_file(config_path);
        const DGPSpec& spec = require_dgp(rc, config_path);
        if (!rc.sample)
            throw Error(ErrorKind::Validation,
                        config_path + ": section [sample] is required for simulate");
        require_valid(spec);

        const Dataset ds = simulate(spec, *rc.sample);
        write_dataset(ds, out_path);

        int64_t participants[2] = {0, 0}, cohort[2] = {0, 0};
        for (const auto& r : ds.records) {
            ++cohort[r.regime];
            participants[r.regime] += r.d;
        }
        for (int s = 0; s < 2; ++s) {
            const double share = cohort[s] > 0
                                     ? static_cast<double>(participants[s]) / cohort[s]
                                     : 0.0;
            char line[128];
            std::snprintf(line, sizeof(line),
                          "regime %d: %lld of %lld participate (share %.6f)\n", s,
                          static_cast<long long>(participants[s]),
                          static_cast<long long>(cohort[s]), share);
            std::cout << line;
        }
    });
}

int cmd_estimate(const std::string& config_path, const std::string& data_path,
                 const std::string& out_path) {
    return guarded([&] {
        const RunConfig rc = parse_config_file(config_path);
        if (!rc.estimate)
            throw Error(ErrorKind::Validation,
                        config_path + ": section [estimate] is required for estimate");
        const RunConfig::Estimate& est = *rc.estimate;
        const DGPSpec* spec = rc.dgp ? &*rc.dgp : nullptr;
        if (est.options.propensity == EstimatorOptions::Propensity::Oracle && !spec)
            throw Error(ErrorKind::Validation,
                        config_path +
                            ": oracle propensity needs a [dgp] section in the config");

        const Dataset ds = read_dataset(data_path);

        std::vector<EstimateResult> rows;
        const RngStream boot_root(est.bootstrap_seed);
        for (size_t i = 0; i < est.estimators.size(); ++i) {
            const EstimatorId id = est.estimators[i];
            EstimateResult row;
            try {
                row = apply_estimator(ds, id, est.options, spec);
                try {
                    const BootstrapSE bs = bootstrap_se(
                        ds,
                        [&](const Dataset& d) {
                            return apply_estimator(d, id, est.options, spec).point;
                        },
                        est.bootstrap_b, boot_root.split(i).key());
                    row.se = bs.se;
                    if (bs.single_replicate)
                        row.diag.warnings.push_back(
                            "bootstrap SE is 0 by convention (single replicate)");
                    if (bs.failures > 0)
                        row.diag.warnings.push_back(
                            std::to_string(bs.failures) +
                            " bootstrap replicates failed");
                } catch (const Error& e) {
                    row.diag.warnings.push_back(std::string("bootstrap failed (") +
                                                error_kind_name(e.kind()) + "): " +
                                                e.what());
                }
            } catch (const Error& e) {
                row.estimand = estimator_name(id);
                row.point = std::numeric_limits<double>::quiet_NaN();
                row.diag.warnings.push_back(std::string("failed (") +
                                            error_kind_name(e.kind()) + "): " +
                                            e.what());
            }
            rows.push_back(std::move(row));
        }
        write_estimates_csv(rows, out_path);
    });
}

int cmd_mc(const std::string& config_path, const std::string& out_path) {
    return guarded([&] {
        const RunConfig rc = parse_config_file(config_path);
        const DGPSpec& spec = require_dgp(rc, config_path);
        if (!rc.study)
            throw Error(ErrorKind::Validation,
                        config_path + ": section [study] is required for mc");

        const StudyResult res = run_study(spec, rc.study->config);
        write_study_report(res, out_path);
        if (!rc.study->replicate_dump.empty())
            write_replicate_dump(res, rc.study->replicate_dump);
    });
}

int run_cli(const std::vector<std::string>& args) {
    auto usage = [] {
        std::cerr
            << "usage: margex <oracle|simulate|estimate|mc> --config <path> "
               "--out <path> [--data <path>] [--threads <k>]\n";
        return 2;
    };
    if (args.empty()) return usage();

    const std::string cmd = args[0];
    std::string config, out, data;
    int threads = 0;
    for (size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (i + 1 >= args.size()) {
            std::cerr << "flag '" << a << "' needs a value\n";
            return 2;
        }
        const std::string& v = args[++i];
        if (a == "--config") config = v;
        else if (a == "--out") out = v;
        else if (a == "--data") data = v;
        else if (a == "--threads") threads = std::stoi(v);
        else {
            std::cerr << "unknown flag '" << a << "'\n";
            return 2;
        }
    }
    if (config.empty() || out.empty()) return usage();
    set_thread_cap(threads);

    if (cmd == "oracle") return cmd_oracle(config, out);
    if (cmd == "simulate") return cmd_simulate(config, out);
    if (cmd == "estimate") {
        if (data.empty()) {
            std::cerr << "estimate needs --data <dataset.csv>\n";
            return 2;
        }
        return cmd_estimate(config, data, out);
    }
    if (cmd == "mc") return cmd_mc(config, out);
    return usage();
}

} // namespace margex
