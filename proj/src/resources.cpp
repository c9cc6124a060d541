#include "anamac/resources.hpp"

#include "anamac/error.hpp"

namespace anamac {

std::uint64_t chip_seed_for(std::uint64_t base_seed, std::size_t index) {
  return index == 0 ? base_seed : mix_seed({base_seed, 0x63686970ULL, index});
}

Chip::Chip(const ChipConfig& base, std::size_t index) : index_(index), config_(base) {
  config_.chip_seed = chip_seed_for(base.chip_seed, index);
  for (std::size_t a = 0; a < kArraysPerChip; ++a) arrays_.emplace_back(config_, a);
}

SynapseArray& Chip::array(std::size_t i) {
  if (i >= arrays_.size()) throw Error(ErrorCode::Unavailable, "chip has no array " + std::to_string(i));
  return arrays_[i];
}

ChipLease::ChipLease(ChipLease&& other) noexcept : owner_(other.owner_), chips_(std::move(other.chips_)) {
  other.owner_ = nullptr;
  other.chips_.clear();
}

ChipLease& ChipLease::operator=(ChipLease&& other) noexcept {
  if (this != &other) {
    release();
    owner_ = other.owner_;
    chips_ = std::move(other.chips_);
    other.owner_ = nullptr;
    other.chips_.clear();
  }
  return *this;
}

ChipLease::~ChipLease() { release(); }

Chip& ChipLease::chip(std::size_t k) const {
  if (k >= chips_.size()) {
    throw Error(ErrorCode::Unavailable,
                "chip " + std::to_string(k) + " not in lease of " + std::to_string(chips_.size()));
  }
  return *chips_[k];
}

const ChipConfig& ChipLease::config() const {
  if (owner_ == nullptr) throw Error(ErrorCode::Unavailable, "empty lease");
  return owner_->config();
}

void ChipLease::release() {
  if (owner_ != nullptr && !chips_.empty()) owner_->release(chips_);
  owner_ = nullptr;
  chips_.clear();
}

ResourceManager::ResourceManager(ChipConfig config, std::size_t chips) : config_(config), count_(chips) {
  config_.validate();
  if (chips == 0) throw Error(ErrorCode::InvalidParams, "need at least one chip");
}

namespace {
std::mutex global_mutex;
ChipConfig global_config;
std::size_t global_chips = 1;
bool global_configured = false;
}  // namespace

void ResourceManager::configure_global(ChipConfig config, std::size_t chips) {
  std::lock_guard lock(global_mutex);
  global_config = config;
  global_chips = chips;
  global_configured = true;
}

ResourceManager& ResourceManager::global() {
  static ResourceManager* instance = [] {
    std::lock_guard lock(global_mutex);
    if (!global_configured) global_config = ChipConfig::defaults();
    return new ResourceManager(global_config, global_chips);
  }();
  return *instance;
}

void ResourceManager::initialize_once() {
  std::call_once(init_flag_, [this] {
    for (std::size_t i = 0; i < count_; ++i) chips_.push_back(std::make_unique<Chip>(config_, i));
    busy_.assign(count_, false);
    ++init_count_;
  });
}

ChipLease ResourceManager::acquire_chips(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidParams, "acquire at least one chip");
  if (n > count_) {
    throw Error(ErrorCode::Unavailable,
                "requested " + std::to_string(n) + " chips, " + std::to_string(count_) + " configured");
  }
  initialize_once();
  std::unique_lock lock(mutex_);
  std::vector<Chip*> picked;
  released_.wait(lock, [&] {
    std::size_t free = 0;
    for (bool b : busy_) free += b ? 0 : 1;
    return free >= n;
  });
  for (std::size_t i = 0; i < count_ && picked.size() < n; ++i) {
    if (!busy_[i]) {
      busy_[i] = true;
      picked.push_back(chips_[i].get());
    }
  }
  return ChipLease(this, std::move(picked));
}

std::size_t ResourceManager::free_chips() const {
  std::lock_guard lock(mutex_);
  if (busy_.empty()) return count_;
  std::size_t free = 0;
  for (bool b : busy_) free += b ? 0 : 1;
  return free;
}

void ResourceManager::release(const std::vector<Chip*>& chips) {
  {
    std::lock_guard lock(mutex_);
    for (auto* c : chips) busy_[c->index()] = false;
  }
  released_.notify_all();
}

}  // namespace anamac
