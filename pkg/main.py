# main.py

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.conf.config import get_settings
from app.conf.logging import configure_logging
from app.routes import analysis as analysis_router
from app.routes import compiler as compiler_router

settings = get_settings()

app = FastAPI(title=settings.API_TITLE)

# --- CORS Middleware ---
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# --- Routers ---
app.include_router(compiler_router.router, prefix="/api")
app.include_router(analysis_router.router, prefix="/api")


# --- Startup ---
@app.on_event("startup")
async def startup_event():
    """
    Installs the log handler once the server starts.
    """
    configure_logging()


# --- Root Endpoint ---
@app.get("/")
async def read_root():
    """
    Root endpoint of the API.
    """
    return {"message": "PiFF compiler is running"}
