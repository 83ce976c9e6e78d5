/*
Copyright 2026 The DPR Simulation Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include "dpr/assignment.hpp"
#include "dpr/cigr.hpp"
#include "dpr/errors.hpp"
#include "dpr/experiments.hpp"
#include "dpr/mbc.hpp"
#include "dpr/ranking.hpp"
#include "dpr/review_sim.hpp"
#include "dpr/stats.hpp"
#include "dpr/text_format.hpp"
