#pragma once

#include "lavawatch/alert.hpp"
#include "lavawatch/analyzer.hpp"
#include "lavawatch/blobs.hpp"
#include "lavawatch/codec.hpp"
#include "lavawatch/config.hpp"
#include "lavawatch/detect.hpp"
#include "lavawatch/dispatch.hpp"
#include "lavawatch/error.hpp"
#include "lavawatch/imaging.hpp"
#include "lavawatch/monitor.hpp"
#include "lavawatch/pipeline.hpp"
#include "lavawatch/simharness.hpp"
#include "lavawatch/trajectory.hpp"
