#pragma once

#include "dsample/hash.hpp"
#include "dsample/nexthit.hpp"
#include "dsample/streams.hpp"
#include "dsample/sketch.hpp"
#include "dsample/wire.hpp"
#include "dsample/referee.hpp"
#include "dsample/ensemble.hpp"
