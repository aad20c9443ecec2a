/* Copyright 2026 The Styledverse Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <string>
#include <vector>

namespace styledverse::testing {

/// Tones as annotated under the four lines of the sample poem, with the
/// second and fourth line endings sharing one rhyme class.
inline const char* kSamplePhonology =
    "# char\ttone\trhyme\n"
    "红\tP\n豆\tZ\n生\tP\n南\tP\n国\tP\n"
    "春\tP\n来\tP\n发\tP\n几\tZ\n枝\tP\tzhi\n"
    "愿\tZ\n君\tP\n多\tP\n采\tZ\n撷\tP\n"
    "此\tZ\n物\tZ\n最\tZ\n相\tP\n思\tP\tzhi\n";

inline const std::vector<std::string> kSampleTemplate{"P Z P P P", "P P P Z P", "Z P P Z P", "Z Z Z P P"};

}  // namespace styledverse::testing
