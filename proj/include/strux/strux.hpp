#pragma once

#include "strux/backend.hpp"
#include "strux/dataset.hpp"
#include "strux/density.hpp"
#include "strux/error.hpp"
#include "strux/eval.hpp"
#include "strux/grpo.hpp"
#include "strux/prompting.hpp"
#include "strux/random.hpp"
#include "strux/reward.hpp"
#include "strux/rollout.hpp"
#include "strux/templates.hpp"
#include "strux/text.hpp"
#include "strux/trajectory.hpp"
