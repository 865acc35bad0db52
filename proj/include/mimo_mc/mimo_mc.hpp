/*
 * Copyright 2026 The mimo-mc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.

*/

#pragma once

#include "mimo_mc/channel.hpp"
#include "mimo_mc/classifiers.hpp"
#include "mimo_mc/config.hpp"
#include "mimo_mc/constellation.hpp"
#include "mimo_mc/decomposition.hpp"
#include "mimo_mc/detection.hpp"
#include "mimo_mc/error.hpp"
#include "mimo_mc/experiment.hpp"
#include "mimo_mc/metrics.hpp"
