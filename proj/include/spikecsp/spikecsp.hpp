#pragma once

#include "analysis.hpp"
#include "compilers.hpp"
#include "detailed_balance.hpp"
#include "energy.hpp"
#include "engine.hpp"
#include "events.hpp"
#include "experiment.hpp"
#include "gibbs.hpp"
#include "io.hpp"
#include "motifs.hpp"
#include "network.hpp"
#include "oracles.hpp"
#include "problems.hpp"
#include "rng.hpp"
#include "trace.hpp"
#include "verification.hpp"
