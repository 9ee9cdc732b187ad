#pragma once

#include "covariant.hpp"
#include "estimation.hpp"
#include "frames.hpp"
#include "haar.hpp"
#include "hs_core.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "povm.hpp"
