#pragma once

#include "margex/estimators.hpp"
#include "margex/oracle.hpp"

#include <optional>
#include <string>

namespace margex {

// One estimand per row: name,value. tau_dp shows a degenerate-weights marker
// when the marginality weights vanish.
void write_estimand_csv(const EstimandReport& rep,
                        const std::optional<DichotomyReport>& dich,
                        const std::string& path);

// Flat "name = value" text, one line per estimand.
std::string estimand_kv_text(const EstimandReport& rep,
                             const std::optional<DichotomyReport>& dich);

// Rows: estimand,point,se,n_used,n_dropped,warnings
void write_estimates_csv(const std::vector<EstimateResult>& rows,
                         const std::string& path);

} // namespace margex
