#include <stdexcept>

#include "alphaforge/miner.hpp"

namespace alphaforge {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(TrainingSample sample) {
    ++pushed_;
    if (data_.size() < capacity_) {
        data_.push_back(std::move(sample));
        return;
    }
    data_[head_] = std::move(sample);
    head_ = (head_ + 1) % capacity_;
}

const TrainingSample& ReplayBuffer::at(std::size_t i) const {
    if (i >= data_.size()) throw std::out_of_range("replay index out of range");
    return data_[(head_ + i) % data_.size()];
}

std::vector<TrainingSample> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<TrainingSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(data_[pick(rng)]);
    return out;
}

}  // namespace alphaforge
