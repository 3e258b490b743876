// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// The solve() entry point is declared in cone_program.hpp; this header exists
// so callers can include the solver without pulling anything extra.

#pragma once

#include "lcvx/cone_program.hpp"
