#pragma once

#include "kakeya/errors.hpp"
#include "kakeya/rational.hpp"
#include "kakeya/cantor.hpp"
#include "kakeya/tree.hpp"
#include "kakeya/sticky.hpp"
#include "kakeya/tubes.hpp"
#include "kakeya/percolation.hpp"
#include "kakeya/config_prob.hpp"
#include "kakeya/stats.hpp"
#include "kakeya/io.hpp"
#include "kakeya/harness.hpp"
