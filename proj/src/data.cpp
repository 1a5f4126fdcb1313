#include "freqrec/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "freqrec/errors.hpp"

namespace freqrec {

InteractionDataset parse_interactions(std::istream& in, const std::string& name) {
  std::map<UserId, std::vector<std::int64_t>> raw;
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::int64_t user = 0, item = 0;
    std::string extra;
    if (!(fields >> user >> item) || (fields >> extra)) {
      throw ParseError("expected 'user_id item_id', got '" + line + "'", line_no);
    }
    if (user <= 0 || item <= 0) throw ParseError("ids must be positive integers", line_no);
    raw[user].push_back(item);
    ++records;
  }
  if (records == 0) throw ValidationError("interaction file '" + name + "' is empty");

  InteractionDataset ds;
  ds.name = name;
  std::set<std::int64_t> items;
  for (auto it = raw.begin(); it != raw.end();) {
    if (it->second.size() < kMinSequenceLength) {
      ++ds.dropped_users;
      it = raw.erase(it);
    } else {
      items.insert(it->second.begin(), it->second.end());
      ++it;
    }
  }
  std::unordered_map<std::int64_t, ItemId> remap;
  ItemId next = 1;
  for (auto item : items) remap[item] = next++;
  ds.item_count = items.size();
  for (auto& [user, seq] : raw) {
    auto& out = ds.user_sequences[user];
    out.reserve(seq.size());
    for (auto item : seq) out.push_back(remap.at(item));
  }
  return ds;
}

InteractionDataset load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file " + path.string());
  return parse_interactions(in, path.filename().string());
}

void write_interactions(const InteractionDataset& ds, std::ostream& out) {
  for (const auto& [user, seq] : ds.user_sequences) {
    for (auto item : seq) out << user << ' ' << item << '\n';
  }
}

void write_interactions(const InteractionDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_interactions(ds, out);
}

SplitViews leave_one_out_split(std::shared_ptr<const InteractionDataset> ds) {
  SplitViews views;
  views.train.dataset = views.valid.dataset = views.test.dataset = ds;
  views.train.kind = SplitKind::kTrain;
  views.valid.kind = SplitKind::kValid;
  views.test.kind = SplitKind::kTest;
  for (const auto& [user, seq] : ds->user_sequences) {
    if (seq.size() < kMinSequenceLength) {
      throw ValidationError("user " + std::to_string(user) + " has fewer than 3 interactions");
    }
    const std::span<const ItemId> all(seq);
    const std::size_t n = seq.size();
    views.train.entries.push_back({user, all.first(n - 2), kPaddingItem});
    views.valid.entries.push_back({user, all.first(n - 2), seq[n - 2]});
    views.test.entries.push_back({user, all.first(n - 1), seq[n - 1]});
  }
  return views;
}

std::size_t Batch::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_mask.begin(), valid_mask.end(), 1));
}

std::vector<std::uint8_t> Batch::input_mask() const {
  std::vector<std::uint8_t> m(input_ids.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = input_ids.values[i] != kPaddingItem ? 1 : 0;
  return m;
}

namespace {

// Input/target rows for one entry, right-aligned in a row of max_len.
void fill_row(const ViewEntry& e, SplitKind kind, std::size_t max_len, std::int64_t* input,
              std::int64_t* target, std::uint8_t* mask) {
  std::vector<ItemId> seq(e.history.begin(), e.history.end());
  if (kind != SplitKind::kTrain) seq.push_back(e.target);
  if (seq.size() < 2) return;
  const std::size_t pairs = seq.size() - 1;
  const std::size_t keep = std::min(pairs, max_len);
  const std::size_t first_pair = pairs - keep;
  const std::size_t offset = max_len - keep;
  for (std::size_t j = 0; j < keep; ++j) {
    input[offset + j] = seq[first_pair + j];
    target[offset + j] = seq[first_pair + j + 1];
    mask[offset + j] = 1;
  }
}

}  // namespace

std::vector<Batch> make_batches(const DatasetView& view, std::size_t batch_size, std::size_t max_len,
                                bool shuffle, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (max_len == 0) throw ConfigError("max sequence length must be at least 1");
  std::vector<std::size_t> order(view.entries.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) std::shuffle(order.begin(), order.end(), rng);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t b = std::min(batch_size, order.size() - start);
    Batch batch;
    batch.input_ids.shape = {b, max_len};
    batch.input_ids.values.assign(b * max_len, kPaddingItem);
    batch.target_ids.assign(b * max_len, kPaddingItem);
    batch.valid_mask.assign(b * max_len, 0);
    for (std::size_t r = 0; r < b; ++r) {
      const auto& e = view.entries[order[start + r]];
      batch.user_ids.push_back(e.user);
      fill_row(e, view.kind, max_len, batch.input_ids.values.data() + r * max_len,
               batch.target_ids.data() + r * max_len, batch.valid_mask.data() + r * max_len);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

InteractionDataset generate_synthetic(const SyntheticOptions& options, Rng& rng) {
  if (!(options.noise_rate >= 0.0 && options.noise_rate < 1.0)) {
    throw ConfigError("noise_rate must lie in [0, 1)");
  }
  if (options.seq_len < kMinSequenceLength) throw ConfigError("synthetic sequences need at least 3 items");
  auto cycles = options.cycles;
  std::size_t item_count = options.item_count;
  if (cycles.empty()) {
    if (options.period_count == 0) throw ConfigError("period_count must be positive");
    std::uniform_int_distribution<std::size_t> period(3, 5);
    std::vector<std::size_t> periods(options.period_count);
    for (auto& p : periods) p = period(rng);
    const std::size_t needed = std::accumulate(periods.begin(), periods.end(), std::size_t{0});
    if (item_count == 0) item_count = needed;
    if (item_count < needed) {
      throw ConfigError("item_count " + std::to_string(item_count) + " cannot hold " + std::to_string(needed) +
                        " distinct cycle items");
    }
    std::vector<ItemId> pool(item_count);
    std::iota(pool.begin(), pool.end(), 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t next = 0;
    for (auto p : periods) {
      cycles.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(next),
                          pool.begin() + static_cast<std::ptrdiff_t>(next + p));
      next += p;
    }
  } else {
    ItemId max_item = 0;
    for (const auto& c : cycles) {
      if (c.empty()) throw ConfigError("synthetic cycles must be non-empty");
      for (auto item : c) {
        if (item <= 0) throw ConfigError("synthetic cycle items must be positive");
        max_item = std::max(max_item, item);
      }
    }
    item_count = std::max(item_count, static_cast<std::size_t>(max_item));
  }

  InteractionDataset ds;
  ds.name = "synthetic";
  ds.item_count = item_count;
  std::uniform_int_distribution<std::size_t> pick_cycle(0, cycles.size() - 1);
  std::uniform_int_distribution<ItemId> random_item(1, static_cast<ItemId>(item_count));
  std::bernoulli_distribution corrupt(options.noise_rate);
  for (std::size_t u = 0; u < options.users; ++u) {
    const auto& cycle = cycles[pick_cycle(rng)];
    std::size_t phase = 0;
    if (options.random_phase) phase = std::uniform_int_distribution<std::size_t>(0, cycle.size() - 1)(rng);
    auto& seq = ds.user_sequences[static_cast<UserId>(u + 1)];
    seq.reserve(options.seq_len);
    for (std::size_t t = 0; t < options.seq_len; ++t) {
      ItemId item = cycle[(phase + t) % cycle.size()];
      if (options.noise_rate > 0.0 && corrupt(rng)) item = random_item(rng);
      seq.push_back(item);
    }
  }
  return ds;
}

std::string LengthRange::label() const {
  return "[" + std::to_string(low) + "," + std::to_string(high) + "]";
}

SparsityBuckets sparsity_buckets(const InteractionDataset& ds, const std::vector<LengthRange>& bounds) {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (bounds[i].low > bounds[i].high) throw ConfigError("bucket " + bounds[i].label() + " is inverted");
    for (std::size_t j = 0; j < i; ++j) {
      if (bounds[i].low <= bounds[j].high && bounds[j].low <= bounds[i].high) {
        throw ConfigError("buckets " + bounds[j].label() + " and " + bounds[i].label() + " overlap");
      }
    }
  }
  SparsityBuckets out;
  out.total_users = ds.user_sequences.size();
  for (const auto& r : bounds) out.buckets.push_back({r, {}, 0.0});
  for (const auto& [user, seq] : ds.user_sequences) {
    bool placed = false;
    for (auto& b : out.buckets) {
      if (seq.size() >= b.range.low && seq.size() <= b.range.high) {
        b.users.push_back(user);
        placed = true;
        break;
      }
    }
    if (!placed) ++out.unbucketed;
  }
  for (auto& b : out.buckets) {
    b.share = out.total_users ? static_cast<double>(b.users.size()) / static_cast<double>(out.total_users) : 0.0;
  }
  return out;
}

std::vector<LengthRange> parse_length_ranges(const std::string& text) {
  // "5-6,7-8"
  std::vector<LengthRange> out;
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    const auto dash = token.find('-');
    try {
      if (dash == std::string::npos) {
        const auto v = std::stoul(token);
        out.push_back({v, v});
      } else {
        out.push_back({std::stoul(token.substr(0, dash)), std::stoul(token.substr(dash + 1))});
      }
    } catch (const std::exception&) {
      throw ConfigError("bad length range '" + token + "' (expected low-high)");
    }
  }
  return out;
}

}  // namespace freqrec
