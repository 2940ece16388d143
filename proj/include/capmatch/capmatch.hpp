// Copyright 2026 The capmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "capmatch/corpus.hpp"
#include "capmatch/error.hpp"
#include "capmatch/fuzzy.hpp"
#include "capmatch/matcher.hpp"
#include "capmatch/metrics.hpp"
#include "capmatch/metrics_io.hpp"
#include "capmatch/pipeline.hpp"
#include "capmatch/random.hpp"
#include "capmatch/termdb.hpp"
#include "capmatch/textproc.hpp"
#include "capmatch/transforms.hpp"
