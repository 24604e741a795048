#include "tsdiff/diffusion/model.hpp"

namespace tsdiff {

template class DiffusionModel<float>;
template class DiffusionModel<double>;

}  // namespace tsdiff
