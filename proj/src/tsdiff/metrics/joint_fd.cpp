#include "tsdiff/metrics/joint_fd.hpp"

#include <sstream>

namespace tsdiff {

std::string format_report(const FdReport& r) {
  std::ostringstream out;
  char num[40];
  std::snprintf(num, sizeof(num), "%.17g", r.value);
  out << "metric_name=" << r.metric_name << "\n"
      << "value=" << num << "\n"
      << "n_real=" << r.n_real << "\n"
      << "n_gen=" << r.n_gen << "\n"
      << "d_emb=" << r.d_emb << "\n"
      << "L_patch=" << r.l_patch << "\n"
      << "extractor_checksum=" << r.extractor_checksum << "\n";
  if (r.low_sample_warning)
    out << "warning=sample count below 2*joint_dim+1; covariance estimate is noisy\n";
  return out.str();
}

}  // namespace tsdiff
