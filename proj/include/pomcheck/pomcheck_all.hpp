#pragma once
#include "pomcheck/canonical.hpp"
#include "pomcheck/cfsm.hpp"
#include "pomcheck/closure.hpp"
#include "pomcheck/errors.hpp"
#include "pomcheck/family.hpp"
#include "pomcheck/ideals.hpp"
#include "pomcheck/label.hpp"
#include "pomcheck/linearize.hpp"
#include "pomcheck/oracle.hpp"
#include "pomcheck/pomset.hpp"
#include "pomcheck/termination.hpp"
#include "pomcheck/word.hpp"
