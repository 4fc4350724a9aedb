#pragma once

#include "pmpnet/diff.hpp"
#include "pmpnet/direct.hpp"
#include "pmpnet/errors.hpp"
#include "pmpnet/grid.hpp"
#include "pmpnet/method1.hpp"
#include "pmpnet/method2.hpp"
#include "pmpnet/optim.hpp"
#include "pmpnet/oracle.hpp"
#include "pmpnet/pmploss.hpp"
#include "pmpnet/problems.hpp"
#include "pmpnet/train.hpp"
#include "pmpnet/trial.hpp"
