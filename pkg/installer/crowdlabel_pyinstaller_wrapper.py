"""
Entry script for the single-file crowdlabel binary.

    pyinstaller --onefile --name crowdlabel installer/crowdlabel_pyinstaller_wrapper.py
"""

from crowdlabel.cli import cli

if __name__ == "__main__":
    # the frozen binary's argv[0] is the temp path it unpacked to
    cli(prog_name="crowdlabel")
