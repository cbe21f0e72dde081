#include "baitradar/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace baitradar {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const GradCheckEntry& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

GradCheckReport grad_check(const GradFragment& fragment, double step, double floor) {
  GradCheckReport report;
  if (!fragment.params) return report;
  ParameterSet& params = *fragment.params;
  Gradients analytic(params);
  analytic.zero();
  fragment.gradient(analytic);

  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = params[p];
    GradCheckEntry entry{param.name, param.value.size(), 0.0};
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      const double saved = param.value[i];
      param.value[i] = saved + step;
      const double plus = fragment.loss();
      param.value[i] = saved - step;
      const double minus = fragment.loss();
      param.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double ga = analytic[p][i];
      if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(ga)) {
        throw std::domain_error("non-finite value while checking '" + param.name + "'");
      }
      const double denom = std::max({std::abs(ga), std::abs(numeric), floor});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(ga - numeric) / denom);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace baitradar
