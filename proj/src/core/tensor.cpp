#include "texgram/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "texgram/error.hpp"

namespace texgram {

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw DataError("tensor data length " + std::to_string(data_.size()) +
                    " does not match shape " + shape_to_string(shape_));
  }
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
  if (shape_product(shape) != data_.size()) {
    throw DataError("cannot reshape " + shape_to_string(shape_) + " to " +
                    shape_to_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  for (const T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace texgram
