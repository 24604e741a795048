#include "tsdiff/extractors/extractor.hpp"

namespace tsdiff {

template class PatchEncoder<float>;
template class PatchEncoder<double>;
template class FeatureExtractors<float>;
template class FeatureExtractors<double>;

}  // namespace tsdiff
