#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <vector>

#include "anamac/chip.hpp"

namespace anamac {

/// One simulated chip: two synapse arrays plus the lock that serializes
/// execution on it (both arrays share the chip's link).
class Chip {
 public:
  Chip(const ChipConfig& base, std::size_t index);

  std::size_t index() const { return index_; }
  const ChipConfig& config() const { return config_; }
  SynapseArray& array(std::size_t i);
  std::mutex& exec_mutex() { return exec_mutex_; }

 private:
  std::size_t index_;
  ChipConfig config_;
  std::vector<SynapseArray> arrays_;
  std::mutex exec_mutex_;
};

/// Fixed-pattern seed of chip `index`; chip 0 keeps the configured seed.
std::uint64_t chip_seed_for(std::uint64_t base_seed, std::size_t index);

class ResourceManager;

/// Exclusive handle on a set of chips, released on destruction.
class ChipLease {
 public:
  ChipLease() = default;
  ChipLease(ChipLease&& other) noexcept;
  ChipLease& operator=(ChipLease&& other) noexcept;
  ChipLease(const ChipLease&) = delete;
  ChipLease& operator=(const ChipLease&) = delete;
  ~ChipLease();

  std::size_t size() const { return chips_.size(); }
  /// k-th leased chip; graph bindings use these local indices.
  Chip& chip(std::size_t k) const;
  const ChipConfig& config() const;
  void release();

 private:
  friend class ResourceManager;
  ChipLease(ResourceManager* owner, std::vector<Chip*> chips) : owner_(owner), chips_(std::move(chips)) {}

  ResourceManager* owner_ = nullptr;
  std::vector<Chip*> chips_;
};

/// Registry of simulated chips. Chips are built lazily on first acquisition
/// and only once; acquisition blocks until enough chips are free.
class ResourceManager {
 public:
  explicit ResourceManager(ChipConfig config = ChipConfig::defaults(), std::size_t chips = 1);

  /// Process-wide instance, configured on first use (see configure_global).
  static ResourceManager& global();
  /// Sets the global configuration; has no effect once chips were initialized.
  static void configure_global(ChipConfig config, std::size_t chips);

  ChipLease acquire_chips(std::size_t n);

  std::size_t configured() const { return count_; }
  const ChipConfig& config() const { return config_; }
  std::size_t init_count() const { return init_count_.load(); }
  std::size_t free_chips() const;

 private:
  friend class ChipLease;
  void release(const std::vector<Chip*>& chips);
  void initialize_once();

  ChipConfig config_;
  std::size_t count_;
  std::once_flag init_flag_;
  std::atomic<std::size_t> init_count_{0};
  std::vector<std::unique_ptr<Chip>> chips_;
  std::vector<bool> busy_;
  mutable std::mutex mutex_;
  std::condition_variable released_;
};

}  // namespace anamac
