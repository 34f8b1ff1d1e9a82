from setuptools import find_packages, setup

setup(
    name='qcis',
    packages=find_packages(exclude=['tests']),
    version='0.1.0',
    description='Learn the first and second moments of Gaussian optical states through qubit transduction '
                'and classical shadows',
    license='MIT',
    python_requires='>=3.9',
    install_requires=[
        'click>=8.1',
        'python-dotenv>=0.13',
        'numpy>=1.23',
        'scipy>=1.9',
        'tqdm>=4.65',
    ],
    entry_points={
        'console_scripts': ['qcis=src.qcis.cli:main'],
    },
)
