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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rawcast {

/// Lossless entropy coding: LZ77 matching + canonical Huffman emitted in the
/// raw DEFLATE bit format (RFC 1951, no zlib/gzip wrapper). Streams produced
/// here are readable by any RFC 1951 decoder and vice versa.
std::vector<uint8_t> entropy_encode(std::span<const uint8_t> data);

/// Inverse of entropy_encode. expected_len is the exact decoded size; the
/// stream is rejected (std::runtime_error) if it is corrupt, truncated, or
/// decodes to a different length.
std::vector<uint8_t> entropy_decode(std::span<const uint8_t> stream,
                                    size_t expected_len);

}  // namespace rawcast
