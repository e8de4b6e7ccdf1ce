#include "tracescope/recorder/event_log.hpp"

namespace tracescope {

    std::string runtime_module_source() {
        return R"PY("""Recording hooks for instrumented programs."""
import atexit as _atexit
import json as _json
import os as _os
import sys as _sys
import threading as _threading

_path = _os.environ.get("TRACESCOPE_EVENTS")
_cap = int(_os.environ.get("TRACESCOPE_EVENT_CAP", "1000000"))
_out = open(_path, "w", encoding="utf-8") if _path else None
_buf = []
_count = 0
_next = 1
_suspended = 0
_over = False
_foreign = False
_owner = _threading.get_ident()
_get_ident = _threading.get_ident
_dumps = _json.dumps
_FLUSH_EVERY = 2048
_INT_MIN = -(2 ** 63)
_INT_MAX = 2 ** 63 - 1


def _flush():
    if _out is not None and _buf:
        _out.write("\n".join(_buf))
        _out.write("\n")
        _out.flush()
    _buf.clear()


def _emit(line):
    global _count, _over
    _count += 1
    if _count > _cap:
        _over = True
        _buf.append("O")
        _flush()
        return
    _buf.append(line)
    if len(_buf) >= _FLUSH_EVERY:
        _flush()


def _off():
    global _foreign
    if _suspended or _over:
        return True
    if _get_ident() != _owner:
        if not _foreign:
            _foreign = True
            _buf.append("T")
            _flush()
        return True
    return False


def _typed(v):
    global _suspended
    t = type(v)
    if v is None:
        return "n\t"
    if t is bool:
        return "b\t1" if v else "b\t0"
    if t is int:
        return ("i\t%d" % v) if _INT_MIN <= v <= _INT_MAX else _render(v)
    if t is float:
        return "f\t" + repr(v)
    if t is str:
        return "s\t" + _dumps(v)
    if isinstance(v, bool):
        return "b\t1" if v else "b\t0"
    if isinstance(v, int):
        return _typed(int(v))
    if isinstance(v, float):
        return "f\t" + repr(float(v))
    if isinstance(v, str):
        return "s\t" + _dumps(str(v))
    item = getattr(v, "item", None)
    if item is not None and getattr(v, "shape", None) == ():
        _suspended += 1
        try:
            scalar = item()
        except Exception:
            scalar = None
        finally:
            _suspended -= 1
        if scalar is not None and type(scalar) in (bool, int, float, str):
            return _typed(scalar)
    return _render(v)


def _render(v):
    global _suspended
    _suspended += 1
    try:
        text = repr(v)
    except Exception:
        text = "<unrepresentable %s>" % type(v).__name__
    finally:
        _suspended -= 1
    return "r\t" + _dumps(type(v).__name__) + "\t" + _dumps(text[:256])


def enter(name, line):
    global _next
    if _off():
        return 0
    h = _next
    _next += 1
    _emit("C\t%d\t%d\t%s" % (h, line, _dumps(name)))
    return h


def leave(h):
    if h and not _off():
        _emit("X\t%d" % h)


def abort(h):
    if h and not _over:
        _emit("A\t%d" % h)


def loop(line, key):
    global _next
    if _off():
        return 0
    h = _next
    _next += 1
    _emit("L\t%d\t%d\t%s" % (h, line, key))
    return h


def iter(h):
    if h and not _off():
        _emit("I\t%d" % h)


def end(h):
    if h and not _over:
        _emit("Z\t%d" % h)


def value(name, v, line, is_variable):
    if _off():
        return
    _emit("V\t%d\t%d\t%s\t%s" % (line, 1 if is_variable else 0, _dumps(name), _typed(v)))


class _Failure:
    __slots__ = ("text",)

    def __init__(self, text):
        self.text = text


def failed(exc):
    try:
        text = "%s: %s" % (type(exc).__name__, exc)
    except Exception:
        text = type(exc).__name__
    return _Failure(text[:256])


def custom(label, v, line):
    if _off():
        return
    if type(v) is _Failure:
        _emit("U\t%d\t%s\te\t%s" % (line, _dumps(label), _dumps(v.text)))
    else:
        _emit("U\t%d\t%s\t%s" % (line, _dumps(label), _typed(v)))


def suspend():
    global _suspended
    _suspended += 1


def resume():
    global _suspended
    if _suspended:
        _suspended -= 1


_previous_hook = _sys.excepthook


def _excepthook(kind, exc, tb):
    if not _over:
        _buf.append("E\t" + _dumps(getattr(kind, "__name__", "Exception")))
        _flush()
    _previous_hook(kind, exc, tb)


_sys.excepthook = _excepthook


def _finish():
    global _out
    if not _over:
        _buf.append("F")
    _flush()
    if _out is not None:
        _out.close()
        _out = None


_atexit.register(_finish)
)PY";
    }

}  // namespace tracescope
