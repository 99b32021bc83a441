#pragma once

#include "bounds.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "fock.hpp"
#include "io.hpp"
#include "junta.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "risk.hpp"
#include "training.hpp"
