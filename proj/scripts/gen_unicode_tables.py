#!/usr/bin/env python3
# Copyright 2026 The capmatch Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates include/capmatch/detail/unicode_tables.hpp.

Token characters are code points in general categories L*, M* and N*.
Folding uses the single-code-point case fold when one exists, else the
single-code-point lowercase mapping.
"""

import sys
import unicodedata

MAX_CP = 0x10FFFF


def is_token_char(cp):
    return unicodedata.category(chr(cp))[0] in "LMN"


def fold(cp):
    c = chr(cp)
    f = c.casefold()
    if len(f) == 1:
        return ord(f)
    low = c.lower()
    if len(low) == 1:
        return ord(low)
    return cp


def ranges(pred):
    out = []
    start = None
    for cp in range(MAX_CP + 2):
        ok = cp <= MAX_CP and not (0xD800 <= cp <= 0xDFFF) and pred(cp)
        if ok and start is None:
            start = cp
        elif not ok and start is not None:
            out.append((start, cp - 1))
            start = None
    return out


def main(path):
    token = ranges(is_token_char)
    folds = [(cp, fold(cp)) for cp in range(0x80, MAX_CP + 1)
             if not (0xD800 <= cp <= 0xDFFF) and fold(cp) != cp]
    with open(path, "w", encoding="ascii") as f:
        f.write("// Generated by scripts/gen_unicode_tables.py from Unicode %s.\n"
                % unicodedata.unidata_version)
        f.write("// Do not edit.\n\n#pragma once\n\n#include <array>\n#include <cstdint>\n\n")
        f.write("namespace capmatch::detail {\n\n")
        f.write("struct CodepointRange {\n  std::uint32_t first;\n  std::uint32_t last;\n};\n\n")
        f.write("struct CodepointFold {\n  std::uint32_t from;\n  std::uint32_t to;\n};\n\n")
        f.write("inline constexpr std::array<CodepointRange, %d> kTokenRanges{{\n" % len(token))
        for a, b in token:
            f.write("    {0x%X, 0x%X},\n" % (a, b))
        f.write("}};\n\n")
        f.write("// Non-ASCII only; ASCII is folded inline.\n")
        f.write("inline constexpr std::array<CodepointFold, %d> kFolds{{\n" % len(folds))
        for a, b in folds:
            f.write("    {0x%X, 0x%X},\n" % (a, b))
        f.write("}};\n\n}  // namespace capmatch::detail\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "include/capmatch/detail/unicode_tables.hpp")
