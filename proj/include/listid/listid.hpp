#pragma once

#include "listid/adversary.hpp"
#include "listid/angluin.hpp"
#include "listid/collection.hpp"
#include "listid/distribution.hpp"
#include "listid/error.hpp"
#include "listid/identify.hpp"
#include "listid/language.hpp"
#include "listid/prob_derand.hpp"
#include "listid/rates.hpp"
#include "listid/rng.hpp"
#include "listid/stats.hpp"
#include "listid/stratify.hpp"
