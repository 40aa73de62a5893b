#pragma once

#include "hetpca/config.hpp"
#include "hetpca/errors.hpp"
#include "hetpca/harness.hpp"
#include "hetpca/io.hpp"
#include "hetpca/linalg.hpp"
#include "hetpca/linmodel.hpp"
#include "hetpca/pca.hpp"
#include "hetpca/rng.hpp"
#include "hetpca/synth.hpp"
