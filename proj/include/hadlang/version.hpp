#pragma once

#define HADLANG_VERSION "0.1.0"
