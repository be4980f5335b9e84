#pragma once

#include "popsynth/constraints.hpp"
#include "popsynth/digest.hpp"
#include "popsynth/error.hpp"
#include "popsynth/evaluation.hpp"
#include "popsynth/extraction.hpp"
#include "popsynth/feature_index.hpp"
#include "popsynth/lbfgs.hpp"
#include "popsynth/maxent.hpp"
#include "popsynth/population.hpp"
#include "popsynth/provenance.hpp"
#include "popsynth/raking.hpp"
#include "popsynth/random.hpp"
#include "popsynth/schema.hpp"
#include "popsynth/synthetic.hpp"
#include "popsynth/table_io.hpp"
