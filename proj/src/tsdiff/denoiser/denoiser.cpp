#include "tsdiff/denoiser/denoiser.hpp"

namespace tsdiff {

template class Denoiser<float>;
template class Denoiser<double>;

}  // namespace tsdiff
