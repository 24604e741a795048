#include "tsdiff/encoder/metadata_encoder.hpp"

// Template implementations live in the header; this translation unit pins
// the production instantiations so dependent code links fast.

namespace tsdiff {

template class MetadataEncoder<float>;
template class MetadataEncoder<double>;
template Mat<float> one_hot<float>(const Eigen::MatrixXi&, const std::vector<int>&);
template Mat<double> one_hot<double>(const Eigen::MatrixXi&, const std::vector<int>&);

}  // namespace tsdiff
