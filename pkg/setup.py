import os
import sys

# Suppress warnings during shutdown, http://bugs.python.org/issue15881
try:
    import multiprocessing
except ImportError:
    pass

from setuptools import setup


# Single source the version.
version_file = os.path.realpath(os.path.join(
    os.path.dirname(__file__), 'scagraph', 'version.py'))
version = {}
with open(version_file) as fp:
    exec(fp.read(), version)


try:
    from sphinx.setup_command import BuildDoc
    from sphinx.cmd import build as sphinxbuild
    HAVE_SPHINX = True
except Exception:
    HAVE_SPHINX = False


CMDCLASS = {}


# Enables building docs and running doctests from setup.py
if HAVE_SPHINX:
    class build_sphinx(BuildDoc):

        description = "generate or test documentation"

        user_options = [("test", "t",
                         "run doctests instead of generating documentation")]

        boolean_options = ["test"]

        def initialize_options(self):
            self.test = False
            super().initialize_options()

        def run(self):
            if self.test:
                path = os.path.join(
                    os.path.abspath('.'), "doc", "_build", "doctest")
                mode = "doctest"
            else:
                path = os.path.join(
                    os.path.abspath('.'), "doc", "_build",
                    version['__version__'])
                mode = "html"
                os.makedirs(path, exist_ok=True)

            sphinx_args = ["-E", "-b", mode, "doc", path]
            status = sphinxbuild.main(sphinx_args)

            if status:
                raise RuntimeError("Documentation step '%s' failed" % (mode,))

            msg = "\nDocumentation step '{}' performed, results here:\n   {}\n"
            sys.stdout.write(msg.format(mode, path))

    CMDCLASS["doc"] = build_sphinx


def setup_package():
    with open('README.rst') as f:
        readme_content = f.read()

    install_requires = ["networkx>=2.5"]
    tests_require = install_requires + ["hypothesis>=5.0"]

    setup(
        name='SCA-Graph',
        version=version['__version__'],
        description='Software composition analysis with modular static and '
                    'dynamic call graphs',
        long_description=readme_content,
        keywords=["sca", "call graph", "vulnerability", "reachability",
                  "dependency resolution"],
        license="Apache License, Version 2.0",
        python_requires=">=3.8",
        classifiers=[
            "Development Status :: 3 - Alpha",
            "Intended Audience :: Developers",
            "License :: OSI Approved :: Apache Software License",
            "Operating System :: OS Independent",
            "Programming Language :: Python :: 3",
            "Programming Language :: Python :: 3.8",
            "Programming Language :: Python :: 3.9",
            "Programming Language :: Python :: 3.10",
            "Programming Language :: Python :: 3.11",
            "Topic :: Security",
            "Topic :: Software Development :: Quality Assurance"],
        install_requires=install_requires,
        extras_require={"test": ["hypothesis>=5.0"]},
        entry_points={"console_scripts": ["sca = scagraph.cli:main"]},
        test_suite="test",
        tests_require=tests_require,
        cmdclass=CMDCLASS,
        packages=["scagraph"])


if __name__ == '__main__':
    setup_package()
