#pragma once

#include "cir.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "pathloss.hpp"
#include "predict.hpp"
#include "raytracer.hpp"
#include "scene.hpp"
#include "segment.hpp"
#include "stats.hpp"
#include "version.hpp"
#include "xband.hpp"
