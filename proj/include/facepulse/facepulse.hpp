#pragma once

#include "facepulse/bss.hpp"
#include "facepulse/butterworth.hpp"
#include "facepulse/config.hpp"
#include "facepulse/csv.hpp"
#include "facepulse/error.hpp"
#include "facepulse/eval.hpp"
#include "facepulse/ica.hpp"
#include "facepulse/pipeline.hpp"
#include "facepulse/plot.hpp"
#include "facepulse/pulse.hpp"
#include "facepulse/spline.hpp"
#include "facepulse/ssa.hpp"
#include "facepulse/stability.hpp"
#include "facepulse/stats.hpp"
#include "facepulse/synthetic.hpp"
#include "facepulse/trajectories.hpp"
