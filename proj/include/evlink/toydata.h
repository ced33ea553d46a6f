// Copyright 2026 The evlink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVLINK_TOYDATA_H_
#define EVLINK_TOYDATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "evlink/extraction.h"
#include "evlink/kbstore.h"

namespace evlink {

// A synthetic event-linking dataset with invented names: battles, elections,
// treaties and protests, each KB entry described by its participants, place
// and year. Every entry gets five differently worded queries; one of them is
// held out for testing. The lexicon lets the rule extractor tag every name
// that occurs in the KB. The two name pools are disjoint from each other and
// from the dataset, for generating negatives.
struct ToyDataset {
  KnowledgeBase kb;
  std::vector<EventQuery> train;
  std::vector<EventQuery> test;
  RoleLexicon lexicon;
  std::vector<std::string> train_name_pool;
  std::vector<std::string> heldout_name_pool;
};

ToyDataset MakeToyDataset(uint64_t seed, size_t num_entries = 50);

}  // namespace evlink

#endif  // EVLINK_TOYDATA_H_
