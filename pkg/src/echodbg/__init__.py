"""echodbg: debug two versions of a program side by side.

Run the same statement under a working and a failing version of a program,
each in its own debuggee process, and compute a navigation map of every
point where their control flow diverges and reconverges. The map supports
replaying both executions to any recorded event.
"""

__version__ = "0.1.0"
