#include "c2f/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "c2f/error.hpp"

namespace c2f {

std::size_t shape_size(const std::vector<std::size_t>& shape) noexcept
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

Tensor::Tensor(std::vector<std::size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill)
{
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_size(shape_) != data_.size()) {
        std::ostringstream msg;
        msg << "tensor shape holds " << shape_size(shape_) << " values but " << data_.size()
            << " were given";
        throw ValidationError(msg.str());
    }
}

std::size_t Tensor::dim(std::size_t axis) const
{
    if (axis >= shape_.size()) {
        throw ValidationError("tensor axis out of range");
    }
    return shape_[axis];
}

float& Tensor::at(std::size_t row, std::size_t col)
{
    return data_[row * shape_[1] + col];
}

float Tensor::at(std::size_t row, std::size_t col) const
{
    return data_[row * shape_[1] + col];
}

void Tensor::fill(float value) noexcept
{
    std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace c2f
