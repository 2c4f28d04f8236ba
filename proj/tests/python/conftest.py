import os
import sys

# In-tree runs point NETIDENT_MODULE_DIR at the build directory holding the
# compiled extension; installed-package runs import it normally.
_module_dir = os.environ.get("NETIDENT_MODULE_DIR")
if _module_dir:
    sys.path.insert(0, _module_dir)
