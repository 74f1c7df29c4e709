// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef TRAJBEAM_HPP
#define TRAJBEAM_HPP

#include "trajbeam/arraysim.hpp"
#include "trajbeam/baselines.hpp"
#include "trajbeam/error.hpp"
#include "trajbeam/harness.hpp"
#include "trajbeam/partition.hpp"
#include "trajbeam/planner.hpp"
#include "trajbeam/serialization.hpp"
#include "trajbeam/skeleton.hpp"
#include "trajbeam/stochastic.hpp"

#endif
