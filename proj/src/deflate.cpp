/* Copyright 2026 The rawcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rawcast/deflate.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace rawcast {

namespace {

// ---------------------------------------------------------------------------
// RFC 1951 constants
// ---------------------------------------------------------------------------

constexpr int kEndOfBlock = 256;
constexpr int kNumLitSymbols = 286;   // 0..255 literals, 256 EOB, 257..285
constexpr int kNumDistSymbols = 30;
constexpr int kNumClSymbols = 19;
constexpr int kMaxBits = 15;
constexpr int kMaxClBits = 7;
constexpr int kMinMatch = 3;
constexpr int kMaxMatch = 258;
constexpr int kWindowSize = 32768;

// length code -> (base length, extra bits), codes 257..285 map to index 0..28
constexpr uint16_t kLengthBase[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11, 13,
                                      15, 17, 19, 23, 27, 31, 35, 43, 51, 59,
                                      67, 83, 99, 115, 131, 163, 195, 227, 258};
constexpr uint8_t kLengthExtra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1,
                                      1, 1, 2, 2, 2, 2, 3, 3, 3, 3,
                                      4, 4, 4, 4, 5, 5, 5, 5, 0};

constexpr uint16_t kDistBase[30] = {
    1,    2,    3,    4,    5,    7,     9,     13,    17,   25,
    33,   49,   65,   97,   129,  193,   257,   385,   513,  769,
    1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
constexpr uint8_t kDistExtra[30] = {0, 0, 0, 0, 1, 1, 2, 2,  3,  3,
                                    4, 4, 5, 5, 6, 6, 7, 7,  8,  8,
                                    9, 9, 10, 10, 11, 11, 12, 12, 13, 13};

// order in which code-length code lengths are stored
constexpr uint8_t kClOrder[19] = {16, 17, 18, 0, 8,  7, 9,  6, 10, 5,
                                  11, 4,  12, 3, 13, 2, 14, 1, 15};

int length_code(int len) {
  for (int i = 28; i >= 0; --i)
    if (len >= kLengthBase[i]) return i;
  return 0;
}

int dist_code(int dist) {
  for (int i = 29; i >= 0; --i)
    if (dist >= kDistBase[i]) return i;
  return 0;
}

// ---------------------------------------------------------------------------
// Bit I/O (LSB first)
// ---------------------------------------------------------------------------

class BitWriter {
 public:
  void bits(uint32_t value, int count) {
    buf_ |= uint64_t(value) << fill_;
    fill_ += count;
    while (fill_ >= 8) {
      out_.push_back(uint8_t(buf_));
      buf_ >>= 8;
      fill_ -= 8;
    }
  }

  void align() {
    if (fill_ > 0) {
      out_.push_back(uint8_t(buf_));
      buf_ = 0;
      fill_ = 0;
    }
  }

  void bytes(const uint8_t* data, size_t n) {
    out_.insert(out_.end(), data, data + n);
  }

  std::vector<uint8_t> take() {
    align();
    return std::move(out_);
  }

  size_t bit_count() const { return out_.size() * 8 + fill_; }

 private:
  std::vector<uint8_t> out_;
  uint64_t buf_ = 0;
  int fill_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const uint8_t> data) : data_(data) {}

  uint32_t bits(int count) {
    while (fill_ < count) {
      if (pos_ >= data_.size()) throw std::runtime_error("deflate: truncated");
      buf_ |= uint64_t(data_[pos_++]) << fill_;
      fill_ += 8;
    }
    const uint32_t v = uint32_t(buf_ & ((1u << count) - 1));
    buf_ >>= count;
    fill_ -= count;
    return v;
  }

  uint32_t bit() { return bits(1); }

  void align() {
    buf_ >>= (fill_ & 7);
    fill_ &= ~7;
  }

  // byte-aligned copy (stored blocks)
  void raw_bytes(uint8_t* dst, size_t n) {
    while (n > 0 && fill_ >= 8) {
      *dst++ = uint8_t(buf_);
      buf_ >>= 8;
      fill_ -= 8;
      --n;
    }
    if (n > data_.size() - pos_)
      throw std::runtime_error("deflate: truncated stored block");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  uint64_t buf_ = 0;
  int fill_ = 0;
};

// ---------------------------------------------------------------------------
// Canonical Huffman construction
// ---------------------------------------------------------------------------

// Code lengths for the given frequencies, longest code <= max_len.
// Unused symbols get length 0. A regular Huffman build is followed by a
// depth-limit repair that always lands on a complete Kraft sum -- strict
// decoders (zlib included) reject incomplete literal/length codes.
std::vector<uint8_t> build_lengths(std::span<const uint64_t> freq,
                                   int max_len) {
  const int n = int(freq.size());
  std::vector<uint8_t> lengths(n, 0);
  std::vector<int> used;
  for (int i = 0; i < n; ++i)
    if (freq[i] > 0) used.push_back(i);

  if (used.empty()) return lengths;
  if (used.size() == 1) {
    lengths[used[0]] = 1;
    return lengths;
  }

  // Huffman tree over used symbols.
  struct Node {
    uint64_t weight;
    int index;  // < n: leaf, else internal
  };
  auto cmp = [](const Node& a, const Node& b) {
    return a.weight > b.weight || (a.weight == b.weight && a.index > b.index);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
  std::vector<std::pair<int, int>> children;  // internal node -> children
  for (int s : used) heap.push({freq[s], s});
  int next_index = n;
  while (heap.size() > 1) {
    Node a = heap.top(); heap.pop();
    Node b = heap.top(); heap.pop();
    children.push_back({a.index, b.index});
    heap.push({a.weight + b.weight, next_index++});
  }
  // Parents are created after their children, so one reverse sweep
  // propagates depths.
  std::vector<int> depth(size_t(next_index), 0);
  for (int i = int(children.size()) - 1; i >= 0; --i) {
    const int node = n + i;
    depth[size_t(children[i].first)] = depth[size_t(node)] + 1;
    depth[size_t(children[i].second)] = depth[size_t(node)] + 1;
  }
  std::vector<int> lens(n, 0);
  for (int s : used) lens[s] = std::min(depth[size_t(s)], max_len);

  // Kraft sum scaled by 2^max_len; budget is exactly 2^max_len.
  const uint64_t budget = uint64_t(1) << max_len;
  auto kraft = [&]() {
    uint64_t k = 0;
    for (int s : used) k += uint64_t(1) << (max_len - lens[s]);
    return k;
  };
  uint64_t k = kraft();

  if (k > budget) {
    // Oversubscribed after clamping: lengthen the rarest symbols.
    std::vector<int> by_freq = used;
    std::sort(by_freq.begin(), by_freq.end(), [&](int a, int b) {
      return freq[a] < freq[b] || (freq[a] == freq[b] && a < b);
    });
    size_t i = 0;
    while (k > budget) {
      const int s = by_freq[i % by_freq.size()];
      ++i;
      if (lens[s] < max_len) {
        k -= uint64_t(1) << (max_len - lens[s] - 1);
        lens[s]++;
      }
    }
  }
  // Restore completeness: shorten the longest codes that still fit. The
  // deficit is a multiple of the smallest available increment, so this
  // terminates with k == budget.
  while (k < budget) {
    int pick = -1;
    for (int s : used) {
      const uint64_t gain = uint64_t(1) << (max_len - lens[s]);
      if (lens[s] > 1 && k + gain <= budget &&
          (pick < 0 || lens[s] > lens[pick] ||
           (lens[s] == lens[pick] && freq[s] > freq[pick]))) {
        pick = s;
      }
    }
    if (pick < 0) throw std::logic_error("deflate: kraft repair failed");
    k += uint64_t(1) << (max_len - lens[pick]);
    lens[pick]--;
  }

  for (int s : used) lengths[s] = uint8_t(lens[s]);
  return lengths;
}

// Canonical codes (already bit-reversed for LSB-first emission).
std::vector<uint16_t> canonical_codes(std::span<const uint8_t> lengths) {
  std::array<int, kMaxBits + 1> count{};
  for (uint8_t l : lengths) count[l]++;
  count[0] = 0;
  std::array<uint32_t, kMaxBits + 2> next{};
  uint32_t code = 0;
  for (int l = 1; l <= kMaxBits; ++l) {
    code = (code + uint32_t(count[l - 1])) << 1;
    next[l] = code;
  }
  std::vector<uint16_t> codes(lengths.size(), 0);
  for (size_t s = 0; s < lengths.size(); ++s) {
    const int l = lengths[s];
    if (l == 0) continue;
    uint32_t c = next[l]++;
    uint32_t rev = 0;
    for (int b = 0; b < l; ++b) rev |= ((c >> b) & 1u) << (l - 1 - b);
    codes[s] = uint16_t(rev);
  }
  return codes;
}

// ---------------------------------------------------------------------------
// LZ77 tokenizer
// ---------------------------------------------------------------------------

struct Token {
  uint16_t length;  // 0: literal
  uint16_t dist;
  uint8_t literal;
};

uint32_t hash3(const uint8_t* p) {
  return (uint32_t(p[0]) << 16 | uint32_t(p[1]) << 8 | p[2]) * 2654435761u >>
         17;
}

std::vector<Token> tokenize(std::span<const uint8_t> data) {
  constexpr int kHashBits = 15;
  constexpr int kMaxChain = 128;
  const size_t n = data.size();
  std::vector<Token> tokens;
  tokens.reserve(n / 4 + 16);
  if (n < kMinMatch) {
    for (size_t i = 0; i < n; ++i) tokens.push_back({0, 0, data[i]});
    return tokens;
  }

  std::vector<int32_t> head(size_t(1) << kHashBits, -1);
  std::vector<int32_t> prev(n, -1);

  auto insert = [&](size_t pos) {
    if (pos + kMinMatch > n) return;
    const uint32_t h = hash3(data.data() + pos);
    prev[pos] = head[h];
    head[h] = int32_t(pos);
  };

  auto find_match = [&](size_t pos) -> std::pair<int, int> {
    if (pos + kMinMatch > n) return {0, 0};
    int best_len = 0, best_dist = 0;
    const int max_len = int(std::min<size_t>(kMaxMatch, n - pos));
    int32_t cand = head[hash3(data.data() + pos)];
    int chain = kMaxChain;
    while (cand >= 0 && chain-- > 0) {
      const int dist = int(pos) - cand;
      if (dist > kWindowSize) break;
      if (data[cand + best_len] == data[pos + best_len] ||
          best_len == 0) {
        int len = 0;
        while (len < max_len && data[cand + len] == data[pos + len]) ++len;
        if (len > best_len) {
          best_len = len;
          best_dist = dist;
          if (len >= max_len) break;
        }
      }
      cand = prev[cand];
    }
    return {best_len, best_dist};
  };

  size_t pos = 0;
  size_t inserted = 0;  // positions [0, inserted) are in the hash chains
  auto insert_to = [&](size_t end) {
    for (; inserted < end; ++inserted) insert(inserted);
  };

  while (pos < n) {
    auto [len, dist] = find_match(pos);
    if (len >= kMinMatch && pos + 1 < n) {
      // one-step lazy matching
      insert_to(pos + 1);
      auto [len2, dist2] = find_match(pos + 1);
      if (len2 > len) {
        tokens.push_back({0, 0, data[pos]});
        ++pos;
        len = len2;
        dist = dist2;
      }
    }
    if (len >= kMinMatch) {
      tokens.push_back({uint16_t(len), uint16_t(dist), 0});
      insert_to(pos + size_t(len));
      pos += size_t(len);
    } else {
      tokens.push_back({0, 0, data[pos]});
      insert_to(pos + 1);
      ++pos;
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

// RLE of code lengths with symbols 16 (copy prev 3-6), 17 (zeros 3-10),
// 18 (zeros 11-138); extra bits stored alongside.
struct ClToken {
  uint8_t sym;
  uint8_t extra;
};

std::vector<ClToken> rle_lengths(std::span<const uint8_t> lengths) {
  std::vector<ClToken> out;
  size_t i = 0;
  const size_t n = lengths.size();
  while (i < n) {
    const uint8_t v = lengths[i];
    size_t run = 1;
    while (i + run < n && lengths[i + run] == v) ++run;
    if (v == 0) {
      while (run >= 3) {
        const size_t take = std::min<size_t>(run, 138);
        if (take >= 11)
          out.push_back({18, uint8_t(take - 11)});
        else
          out.push_back({17, uint8_t(take - 3)});
        run -= take;
        i += take;
      }
      for (; run > 0; --run, ++i) out.push_back({0, 0});
    } else {
      out.push_back({v, 0});
      ++i;
      --run;
      while (run >= 3) {
        const size_t take = std::min<size_t>(run, 6);
        out.push_back({16, uint8_t(take - 3)});
        run -= take;
        i += take;
      }
      for (; run > 0; --run, ++i) out.push_back({v, 0});
    }
  }
  return out;
}

struct DynamicPlan {
  std::vector<uint8_t> lit_len, dist_len, cl_len;
  std::vector<uint16_t> lit_code, dist_code, cl_code;
  std::vector<ClToken> cl_tokens;
  int hlit, hdist, hclen;
  size_t header_bits;
};

DynamicPlan plan_dynamic(std::span<const uint64_t> lit_freq,
                         std::span<const uint64_t> dist_freq) {
  DynamicPlan p;
  p.lit_len = build_lengths(lit_freq, kMaxBits);
  p.dist_len = build_lengths(dist_freq, kMaxBits);

  p.hlit = kNumLitSymbols;
  while (p.hlit > 257 && p.lit_len[p.hlit - 1] == 0) --p.hlit;
  p.hdist = kNumDistSymbols;
  while (p.hdist > 1 && p.dist_len[p.hdist - 1] == 0) --p.hdist;

  std::vector<uint8_t> all(p.lit_len.begin(), p.lit_len.begin() + p.hlit);
  all.insert(all.end(), p.dist_len.begin(), p.dist_len.begin() + p.hdist);
  p.cl_tokens = rle_lengths(all);

  std::vector<uint64_t> cl_freq(kNumClSymbols, 0);
  for (const auto& t : p.cl_tokens) cl_freq[t.sym]++;
  p.cl_len = build_lengths(cl_freq, kMaxClBits);
  p.cl_code = canonical_codes(p.cl_len);
  p.lit_code = canonical_codes(p.lit_len);
  p.dist_code = canonical_codes(p.dist_len);

  p.hclen = kNumClSymbols;
  while (p.hclen > 4 && p.cl_len[kClOrder[p.hclen - 1]] == 0) --p.hclen;

  p.header_bits = 5 + 5 + 4 + size_t(p.hclen) * 3;
  for (const auto& t : p.cl_tokens) {
    p.header_bits += p.cl_len[t.sym];
    if (t.sym == 16) p.header_bits += 2;
    if (t.sym == 17) p.header_bits += 3;
    if (t.sym == 18) p.header_bits += 7;
  }
  return p;
}

size_t token_bits(const std::vector<Token>& tokens,
                  std::span<const uint8_t> lit_len,
                  std::span<const uint8_t> dist_len) {
  size_t bits = 0;
  for (const auto& t : tokens) {
    if (t.length == 0) {
      bits += lit_len[t.literal];
    } else {
      const int lc = length_code(t.length);
      const int dc = dist_code(t.dist);
      bits += lit_len[257 + lc] + kLengthExtra[lc];
      bits += dist_len[dc] + kDistExtra[dc];
    }
  }
  bits += lit_len[kEndOfBlock];
  return bits;
}

void fixed_lengths(std::vector<uint8_t>& lit, std::vector<uint8_t>& dist) {
  lit.assign(288, 8);
  for (int i = 144; i < 256; ++i) lit[i] = 9;
  for (int i = 256; i < 280; ++i) lit[i] = 7;
  dist.assign(30, 5);
}

void emit_tokens(BitWriter& bw, const std::vector<Token>& tokens,
                 std::span<const uint8_t> lit_len,
                 std::span<const uint16_t> lit_code,
                 std::span<const uint8_t> dist_len,
                 std::span<const uint16_t> dist_code) {
  for (const auto& t : tokens) {
    if (t.length == 0) {
      bw.bits(lit_code[t.literal], lit_len[t.literal]);
    } else {
      const int lc = length_code(t.length);
      bw.bits(lit_code[257 + lc], lit_len[257 + lc]);
      if (kLengthExtra[lc])
        bw.bits(uint32_t(t.length - kLengthBase[lc]), kLengthExtra[lc]);
      const int dc = dist_code(t.dist);
      bw.bits(dist_code[dc], dist_len[dc]);
      if (kDistExtra[dc])
        bw.bits(uint32_t(t.dist - kDistBase[dc]), kDistExtra[dc]);
    }
  }
  bw.bits(lit_code[kEndOfBlock], lit_len[kEndOfBlock]);
}

void emit_stored(BitWriter& bw, std::span<const uint8_t> data) {
  size_t off = 0;
  do {
    const size_t chunk = std::min<size_t>(data.size() - off, 65535);
    const bool final = off + chunk == data.size();
    bw.bits(final ? 1 : 0, 1);
    bw.bits(0, 2);  // BTYPE=00
    bw.align();
    const uint16_t len = uint16_t(chunk);
    bw.bits(len, 16);
    bw.bits(uint16_t(~len), 16);
    bw.bytes(data.data() + off, chunk);
    off += chunk;
  } while (off < data.size());
}

}  // namespace

std::vector<uint8_t> entropy_encode(std::span<const uint8_t> data) {
  if (data.empty()) {
    BitWriter bw;
    emit_stored(bw, data);
    return bw.take();
  }

  const std::vector<Token> tokens = tokenize(data);

  std::vector<uint64_t> lit_freq(kNumLitSymbols, 0);
  std::vector<uint64_t> dist_freq(kNumDistSymbols, 0);
  lit_freq[kEndOfBlock] = 1;
  for (const auto& t : tokens) {
    if (t.length == 0) {
      lit_freq[t.literal]++;
    } else {
      lit_freq[257 + length_code(t.length)]++;
      dist_freq[dist_code(t.dist)]++;
    }
  }

  const DynamicPlan plan = plan_dynamic(lit_freq, dist_freq);
  const size_t dyn_bits =
      3 + plan.header_bits + token_bits(tokens, plan.lit_len, plan.dist_len);

  std::vector<uint8_t> fix_lit, fix_dist;
  fixed_lengths(fix_lit, fix_dist);
  const size_t fix_bits = 3 + token_bits(tokens, fix_lit, fix_dist);

  const size_t stored_bits =
      (data.size() + 5 * ((data.size() + 65534) / 65535)) * 8 + 7;

  BitWriter bw;
  if (stored_bits < dyn_bits && stored_bits < fix_bits) {
    emit_stored(bw, data);
    return bw.take();
  }

  bw.bits(1, 1);  // BFINAL
  if (fix_bits <= dyn_bits) {
    bw.bits(1, 2);  // fixed
    const auto lit_code = canonical_codes(fix_lit);
    const auto dist_code = canonical_codes(fix_dist);
    emit_tokens(bw, tokens, fix_lit, lit_code, fix_dist, dist_code);
  } else {
    bw.bits(2, 2);  // dynamic
    bw.bits(uint32_t(plan.hlit - 257), 5);
    bw.bits(uint32_t(plan.hdist - 1), 5);
    bw.bits(uint32_t(plan.hclen - 4), 4);
    for (int i = 0; i < plan.hclen; ++i)
      bw.bits(plan.cl_len[kClOrder[i]], 3);
    for (const auto& t : plan.cl_tokens) {
      bw.bits(plan.cl_code[t.sym], plan.cl_len[t.sym]);
      if (t.sym == 16) bw.bits(t.extra, 2);
      if (t.sym == 17) bw.bits(t.extra, 3);
      if (t.sym == 18) bw.bits(t.extra, 7);
    }
    emit_tokens(bw, tokens, plan.lit_len, plan.lit_code, plan.dist_len,
                plan.dist_code);
  }
  return bw.take();
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

namespace {

// Canonical prefix decoder; walks the code bit by bit.
class HuffmanDecoder {
 public:
  explicit HuffmanDecoder(std::span<const uint8_t> lengths) {
    std::array<int, kMaxBits + 1> count{};
    for (uint8_t l : lengths) {
      if (l > kMaxBits) throw std::runtime_error("deflate: bad code length");
      count[l]++;
    }
    count[0] = 0;
    int total = 0;
    for (int l = 1; l <= kMaxBits; ++l) total += count[l];
    if (total == 0) {
      empty_ = true;
      return;
    }
    // Kraft check: over-subscribed tables are invalid. An incomplete code
    // is tolerated only for the single-symbol case (as zlib does for the
    // distance table).
    int64_t left = 1;
    for (int l = 1; l <= kMaxBits; ++l) {
      left = (left << 1) - count[l];
      if (left < 0) throw std::runtime_error("deflate: oversubscribed code");
    }
    uint32_t code = 0;
    int index = 0;
    for (int l = 1; l <= kMaxBits; ++l) {
      code = (code + uint32_t(count[l - 1])) << 1;
      first_code_[l] = code;
      first_index_[l] = index;
      index += count[l];
    }
    symbols_.resize(index);
    std::array<int, kMaxBits + 1> fill = first_index_;
    for (size_t s = 0; s < lengths.size(); ++s) {
      if (lengths[s]) symbols_[size_t(fill[lengths[s]]++)] = uint16_t(s);
    }
    count_ = count;
  }

  bool empty() const { return empty_; }

  int decode(BitReader& br) const {
    if (empty_) throw std::runtime_error("deflate: decode with empty table");
    uint32_t code = 0;
    for (int l = 1; l <= kMaxBits; ++l) {
      code |= br.bit();
      if (count_[l] > 0 &&
          code < first_code_[l] + uint32_t(count_[l])) {
        return symbols_[size_t(first_index_[l]) + (code - first_code_[l])];
      }
      code <<= 1;
    }
    throw std::runtime_error("deflate: invalid code");
  }

 private:
  bool empty_ = false;
  std::array<uint32_t, kMaxBits + 1> first_code_{};
  std::array<int, kMaxBits + 1> first_index_{};
  std::array<int, kMaxBits + 1> count_{};
  std::vector<uint16_t> symbols_;
};

void inflate_block(BitReader& br, const HuffmanDecoder& lit,
                   const HuffmanDecoder& dist, std::vector<uint8_t>& out,
                   size_t expected_len) {
  for (;;) {
    const int sym = lit.decode(br);
    if (sym == kEndOfBlock) return;
    if (sym < 256) {
      if (out.size() >= expected_len)
        throw std::runtime_error("deflate: output longer than declared");
      out.push_back(uint8_t(sym));
      continue;
    }
    const int li = sym - 257;
    if (li >= 29) throw std::runtime_error("deflate: bad length symbol");
    const int len = kLengthBase[li] + int(br.bits(kLengthExtra[li]));
    const int ds = dist.decode(br);
    if (ds >= 30) throw std::runtime_error("deflate: bad distance symbol");
    const size_t d = kDistBase[ds] + br.bits(kDistExtra[ds]);
    if (d > out.size())
      throw std::runtime_error("deflate: distance before stream start");
    if (out.size() + size_t(len) > expected_len)
      throw std::runtime_error("deflate: output longer than declared");
    const size_t start = out.size() - d;
    for (int i = 0; i < len; ++i) out.push_back(out[start + size_t(i)]);
  }
}

}  // namespace

std::vector<uint8_t> entropy_decode(std::span<const uint8_t> stream,
                                    size_t expected_len) {
  BitReader br(stream);
  std::vector<uint8_t> out;
  out.reserve(expected_len);
  bool final = false;
  while (!final) {
    final = br.bit() != 0;
    const uint32_t type = br.bits(2);
    if (type == 0) {
      br.align();
      const uint32_t len = br.bits(16);
      const uint32_t nlen = br.bits(16);
      if ((len ^ 0xFFFFu) != nlen)
        throw std::runtime_error("deflate: stored LEN/NLEN mismatch");
      if (out.size() + len > expected_len)
        throw std::runtime_error("deflate: output longer than declared");
      const size_t at = out.size();
      out.resize(at + len);
      br.raw_bytes(out.data() + at, len);
    } else if (type == 1) {
      std::vector<uint8_t> lit_len, dist_len;
      fixed_lengths(lit_len, dist_len);
      HuffmanDecoder lit(lit_len), dist(dist_len);
      inflate_block(br, lit, dist, out, expected_len);
    } else if (type == 2) {
      const int hlit = int(br.bits(5)) + 257;
      const int hdist = int(br.bits(5)) + 1;
      const int hclen = int(br.bits(4)) + 4;
      if (hlit > kNumLitSymbols || hdist > kNumDistSymbols)
        throw std::runtime_error("deflate: bad table sizes");
      std::vector<uint8_t> cl_len(kNumClSymbols, 0);
      for (int i = 0; i < hclen; ++i)
        cl_len[kClOrder[i]] = uint8_t(br.bits(3));
      HuffmanDecoder cl(cl_len);
      std::vector<uint8_t> all;
      all.reserve(size_t(hlit) + hdist);
      while (all.size() < size_t(hlit) + hdist) {
        const int sym = cl.decode(br);
        if (sym < 16) {
          all.push_back(uint8_t(sym));
        } else if (sym == 16) {
          if (all.empty())
            throw std::runtime_error("deflate: repeat with no previous");
          const int rep = 3 + int(br.bits(2));
          all.insert(all.end(), size_t(rep), all.back());
        } else if (sym == 17) {
          all.insert(all.end(), 3 + br.bits(3), 0);
        } else {
          all.insert(all.end(), 11 + br.bits(7), 0);
        }
      }
      if (all.size() != size_t(hlit) + hdist)
        throw std::runtime_error("deflate: code length overrun");
      std::vector<uint8_t> lit_len(all.begin(), all.begin() + hlit);
      std::vector<uint8_t> dist_len(all.begin() + hlit, all.end());
      if (lit_len[kEndOfBlock] == 0)
        throw std::runtime_error("deflate: missing end-of-block code");
      HuffmanDecoder lit(lit_len), dist(dist_len);
      inflate_block(br, lit, dist, out, expected_len);
    } else {
      throw std::runtime_error("deflate: reserved block type");
    }
  }
  if (out.size() != expected_len)
    throw std::runtime_error("deflate: output shorter than declared");
  return out;
}

}  // namespace rawcast
