#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "freqrec/ops.hpp"

namespace freqrec {

using ItemId = std::int64_t;
using UserId = std::int64_t;

inline constexpr ItemId kPaddingItem = 0;
inline constexpr std::size_t kMinSequenceLength = 3;

// Chronological item sequences keyed by user. Item ids are dense in
// [1, item_count]; 0 is reserved for padding.
struct InteractionDataset {
  std::map<UserId, std::vector<ItemId>> user_sequences;
  std::size_t item_count = 0;
  std::string name;
  // Users discarded at load time for having fewer than 3 interactions.
  std::size_t dropped_users = 0;
};

// Reads "user_id item_id" lines (chronological per user). Item ids are
// remapped to 1..V preserving their numeric order, so already-dense input
// keeps its ids.
InteractionDataset load_interactions(const std::filesystem::path& path);
InteractionDataset parse_interactions(std::istream& in, const std::string& name = "");

void write_interactions(const InteractionDataset& ds, std::ostream& out);
void write_interactions(const InteractionDataset& ds, const std::filesystem::path& path);

enum class SplitKind { kTrain, kValid, kTest };

// One user's slice of a split. For kTrain, `history` is the training
// prefix and every adjacent pair inside it is a training example; for the
// evaluation splits `history` is the input and `target` the held-out item.
struct ViewEntry {
  UserId user = 0;
  std::span<const ItemId> history;
  ItemId target = kPaddingItem;
};

struct DatasetView {
  std::shared_ptr<const InteractionDataset> dataset;
  SplitKind kind = SplitKind::kTrain;
  std::vector<ViewEntry> entries;  // ascending user id
};

struct SplitViews {
  DatasetView train;
  DatasetView valid;
  DatasetView test;
};

// Per user: test target = last item, valid target = second-to-last, train
// = the rest. All views reference the same sequences.
SplitViews leave_one_out_split(std::shared_ptr<const InteractionDataset> ds);

struct Batch {
  IndexTensor input_ids;                // B x L, left-padded with 0
  std::vector<std::int64_t> target_ids; // B x L, next item per slot, 0 on padding
  std::vector<std::uint8_t> valid_mask; // B x L
  std::vector<UserId> user_ids;

  std::size_t size() const { return user_ids.size(); }
  std::size_t length() const { return input_ids.shape.empty() ? 0 : input_ids.shape[1]; }
  std::size_t valid_count() const;
  // Pad mask of the inputs (nonzero where an item is present).
  std::vector<std::uint8_t> input_mask() const;
};

// Truncates each row to its most recent `max_len` pairs and left-pads.
// Without shuffling users keep ascending id order; the last batch may be
// smaller.
std::vector<Batch> make_batches(const DatasetView& view, std::size_t batch_size, std::size_t max_len,
                                bool shuffle, Rng& rng);

struct SyntheticOptions {
  std::size_t period_count = 4;
  std::size_t users = 100;
  std::size_t seq_len = 20;
  double noise_rate = 0.0;
  // 0 means "exactly the items used by the cycles".
  std::size_t item_count = 0;
  // Explicit cycles; when empty, period_count cycles of period 3-5 are drawn
  // over distinct items.
  std::vector<std::vector<ItemId>> cycles;
  // Start each user at a random phase of their cycle.
  bool random_phase = true;
};

// Every user walks one fixed item cycle; each position is independently
// replaced by a uniform random item with probability noise_rate.
InteractionDataset generate_synthetic(const SyntheticOptions& options, Rng& rng);

struct LengthRange {
  std::size_t low = 0;   // inclusive
  std::size_t high = 0;  // inclusive
  std::string label() const;
};

struct SparsityBucket {
  LengthRange range;
  std::vector<UserId> users;
  double share = 0.0;  // fraction of all users
};

struct SparsityBuckets {
  std::vector<SparsityBucket> buckets;
  std::size_t unbucketed = 0;
  std::size_t total_users = 0;
};

// Groups users by raw sequence length. Overlapping or inverted ranges are a
// ConfigError.
SparsityBuckets sparsity_buckets(const InteractionDataset& ds, const std::vector<LengthRange>& bounds);

std::vector<LengthRange> parse_length_ranges(const std::string& text);

}  // namespace freqrec
