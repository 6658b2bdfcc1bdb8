#pragma once

#include "tiescan/common.hpp"
#include "tiescan/contour.hpp"
#include "tiescan/decoder.hpp"
#include "tiescan/harness.hpp"
#include "tiescan/oracles.hpp"
#include "tiescan/sensing.hpp"
#include "tiescan/theory.hpp"
