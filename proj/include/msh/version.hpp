#pragma once

#define MSH_VERSION "0.1.0"
