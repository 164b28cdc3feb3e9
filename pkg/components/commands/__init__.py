# Command组件模块：generate / analyze / optimize / export
