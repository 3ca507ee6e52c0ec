#pragma once

#include "fairtree/curve.hpp"
#include "fairtree/dataset.hpp"
#include "fairtree/dtfc.hpp"
#include "fairtree/dual_tree.hpp"
#include "fairtree/error.hpp"
#include "fairtree/harness.hpp"
#include "fairtree/io.hpp"
#include "fairtree/metrics.hpp"
#include "fairtree/policies.hpp"
#include "fairtree/report.hpp"
#include "fairtree/sampling.hpp"
#include "fairtree/tree.hpp"
