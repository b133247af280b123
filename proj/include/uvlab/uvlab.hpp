#pragma once

#include "uvlab/datasets.hpp"
#include "uvlab/eos.hpp"
#include "uvlab/fixed_points.hpp"
#include "uvlab/mat.hpp"
#include "uvlab/phase_portrait.hpp"
#include "uvlab/signal.hpp"
#include "uvlab/trainer.hpp"
#include "uvlab/util.hpp"
#include "uvlab/uv_core.hpp"
