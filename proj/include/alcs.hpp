#pragma once

#include "alcs/classifier.hpp"
#include "alcs/corpus.hpp"
#include "alcs/dvec.hpp"
#include "alcs/evaluation.hpp"
#include "alcs/experiment.hpp"
#include "alcs/feature_matrix.hpp"
#include "alcs/harness.hpp"
#include "alcs/lsi.hpp"
#include "alcs/report.hpp"
#include "alcs/selection.hpp"
#include "alcs/sidecar.hpp"
#include "alcs/text.hpp"
