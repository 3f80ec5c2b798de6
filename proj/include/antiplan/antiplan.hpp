#pragma once

#include "antiplan/common.hpp"
#include "antiplan/geometry.hpp"
#include "antiplan/blockworld.hpp"
#include "antiplan/pddl/sexpr.hpp"
#include "antiplan/pddl/domain.hpp"
#include "antiplan/pddl/problem.hpp"
#include "antiplan/pddl/ground.hpp"
#include "antiplan/pddl/blockworld.hpp"
#include "antiplan/motion/roadmap.hpp"
#include "antiplan/motion/move_costs.hpp"
#include "antiplan/planner/astar.hpp"
#include "antiplan/planner/task_solver.hpp"
#include "antiplan/generate.hpp"
#include "antiplan/learn/state_graph.hpp"
#include "antiplan/learn/exact.hpp"
#include "antiplan/learn/model.hpp"
#include "antiplan/learn/train.hpp"
#include "antiplan/learn/dataset.hpp"
#include "antiplan/search/anticipatory_search.hpp"
#include "antiplan/bench/bench.hpp"
#include "antiplan/io/json.hpp"
