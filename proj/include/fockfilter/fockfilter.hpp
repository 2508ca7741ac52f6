#pragma once

#include "fockfilter/errors.hpp"
#include "fockfilter/fock_core.hpp"
#include "fockfilter/gaussian_states.hpp"
#include "fockfilter/cavity_gate.hpp"
#include "fockfilter/filtration.hpp"
#include "fockfilter/optimize.hpp"
#include "fockfilter/qng_criteria.hpp"
#include "fockfilter/bunching.hpp"
#include "fockfilter/sensing.hpp"
#include "fockfilter/tmsv_baseline.hpp"
#include "fockfilter/io.hpp"
