#include "diffnet/types.hpp"

#include "diffnet/errors.hpp"

namespace diffnet {

std::vector<Block> make_blocks(Time horizon, int n_blocks) {
  if (horizon < 1) throw ConfigError("make_blocks: horizon must be >= 1");
  if (n_blocks < 1 || n_blocks > horizon)
    throw ConfigError("make_blocks: need 1 <= n_blocks <= horizon");
  const Time len = horizon / n_blocks;
  std::vector<Block> blocks;
  blocks.reserve(n_blocks);
  for (int b = 1; b <= n_blocks; ++b) {
    Block blk;
    blk.index = b;
    blk.first = static_cast<Time>((b - 1) * len + 1);
    blk.last = (b == n_blocks) ? horizon : static_cast<Time>(b * len);
    blocks.push_back(blk);
  }
  return blocks;
}

ObservationSet ObservationSet::with_blocks(std::vector<std::vector<double>> series, int n_blocks) {
  ObservationSet data;
  data.series = std::move(series);
  if (data.series.empty() || data.series[0].size() < 2)
    data.validate();  // bad input data, not a block-count problem
  data.blocks = make_blocks(data.horizon(), n_blocks);
  data.validate();
  return data;
}

void ObservationSet::validate() const {
  if (series.empty()) throw DataError("observation set: no series");
  const size_t len = series[0].size();
  if (len < 2) throw DataError("observation set: series shorter than 2 steps");
  for (size_t i = 1; i < series.size(); ++i)
    if (series[i].size() != len)
      throw DataError("observation set: series lengths differ (node " + std::to_string(i) + ")");
  if (blocks.empty()) throw DataError("observation set: no block partition");
  Time expect = 1;
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].index != static_cast<int>(b) + 1 || blocks[b].first != expect ||
        blocks[b].last < blocks[b].first)
      throw DataError("observation set: blocks do not partition the horizon");
    expect = blocks[b].last + 1;
  }
  if (expect != static_cast<Time>(len) + 1)
    throw DataError("observation set: blocks do not cover the horizon");
}

}  // namespace diffnet
